#include "unistore/tower.hpp"

#include "unistore/error.hpp"
#include "unistore/eval.hpp"

namespace unistore {

int comprehension_level(const Snapshot& snap, ObjectId domain, std::optional<int> target_level,
                        const TowerConfig& config) {
  int level = 0;
  if (domain == builtin::kMetaObject) {
    level = target_level.value_or(2);
    if (level < 2)
      throw Error(ErrorKind::Stratification, "comprehension over MetaObject must target level >= 2",
                  {{"level", level}});
  } else {
    level = snap.member_level(domain) + 1;
    if (target_level && *target_level != level)
      throw Error(ErrorKind::Stratification,
                  "domain '" + snap.name_of(domain) + "' yields level " + std::to_string(level) +
                      ", not the requested " + std::to_string(*target_level),
                  {{"level", level}, {"requested", *target_level}});
  }
  if (level > config.max_level)
    throw Error(ErrorKind::TowerCapExceeded,
                "level " + std::to_string(level) + " exceeds tower cap " + std::to_string(config.max_level),
                {{"level", level}, {"max_level", config.max_level}});
  return level;
}

int check_comprehension(const Snapshot& snap, std::string_view name, const Formula& formula, ObjectId domain,
                        std::optional<int> target_level, const TowerConfig& config) {
  if (name.empty()) throw Error(ErrorKind::Validation, "meta name is empty");
  if (snap.lookup(name))
    throw Error(ErrorKind::DuplicateName, "name '" + std::string(name) + "' is already in use", {{"name", std::string(name)}});
  if (!snap.is_concept(domain) && !snap.is_meta(domain))
    throw Error(ErrorKind::UnknownDomain, "domain " + std::to_string(domain) + " is not defined", {{"domain", domain}});
  const int level = comprehension_level(snap, domain, target_level, config);
  for (const auto& ref : formula.referenced_domains()) {
    const ObjectId id = snap.resolve_domain(ref);
    const int ref_level = snap.level(id);
    if (ref_level >= level)
      throw Error(ErrorKind::Stratification,
                  "level-" + std::to_string(level) + " meta '" + std::string(name) + "' references '" + ref +
                      "' of level " + std::to_string(ref_level),
                  {{"level", level}, {"domain", ref}, {"domain_level", ref_level}});
  }
  typecheck(formula, snap.member_concept(domain), snap);
  return level;
}

std::vector<ObjectId> Snapshot::compute_meta_extent(ObjectId id) const {
  const auto* m = meta(id);
  if (!m)
    throw Error(ErrorKind::UnknownId, "no meta " + std::to_string(id) + " at state " + std::to_string(state_),
                {{"id", id}, {"state", state_}});
  std::vector<ObjectId> candidates;
  if (m->domain == builtin::kMetaObject) {
    for (ObjectId x : extent(builtin::kMetaObject)) {
      const auto* xm = meta(x);
      if (xm && xm->level == m->level - 1) candidates.push_back(x);
    }
  } else {
    candidates = members(m->domain);
  }
  std::vector<ObjectId> out;
  for (ObjectId x : candidates)
    if (evaluate(m->formula, x, *this)) out.push_back(x);
  return out;
}

std::vector<ObjectId> Snapshot::meta_extent(ObjectId id) const {
  const Store::MemoKey key{id, state_};
  {
    std::lock_guard lock(store_->memo_mutex_);
    auto it = store_->meta_memo_.find(key);
    if (it != store_->meta_memo_.end()) return *it->second;
  }
  auto computed = std::make_shared<const std::vector<ObjectId>>(compute_meta_extent(id));
  std::lock_guard lock(store_->memo_mutex_);
  if (store_->meta_memo_.size() > 200000) store_->meta_memo_.clear();
  auto [it, inserted] = store_->meta_memo_.emplace(key, computed);
  return *it->second;
}

}  // namespace unistore
