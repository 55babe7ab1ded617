#pragma once

#include <optional>
#include <string_view>

#include "unistore/formula.hpp"
#include "unistore/store.hpp"

namespace unistore {

// Level of a comprehension {x : domain | formula}. Members of a concept are
// level 0, so comprehension over them is level 1; comprehension over level-k
// members is level k+1. Over the built-in MetaObject domain the target level
// is chosen by the caller (default 2) and members are the metas one level below.
// Throws UnknownDomain, TowerCapExceeded, Stratification.
int comprehension_level(const Snapshot& snap, ObjectId domain, std::optional<int> target_level,
                        const TowerConfig& config);

// Full admission check for a new meta; returns its level.
// Throws DuplicateName, UnknownDomain, TowerCapExceeded, Stratification and
// the type-check errors of the defining formula.
int check_comprehension(const Snapshot& snap, std::string_view name, const Formula& formula, ObjectId domain,
                        std::optional<int> target_level, const TowerConfig& config);

}  // namespace unistore
