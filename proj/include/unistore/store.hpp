#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "unistore/formula.hpp"
#include "unistore/rules.hpp"
#include "unistore/types.hpp"
#include "unistore/value.hpp"

namespace unistore {

struct ObjectRecord {
  ObjectId concept_id = 0;
  bool alive = true;
  StateIndex created_at = 0;
  std::optional<StateIndex> retired_at;
  ValueMap values;
};

struct ConceptSchema {
  ObjectId id = 0;
  std::string name;
  std::vector<AttributeSpec> attributes;
  StateIndex defined_at = 0;
  std::string origin;  // delivering pack, empty for ad-hoc definitions

  const AttributeSpec* attribute(std::string_view attr) const;
};

struct MetaDef {
  ObjectId id = 0;
  std::string name;
  int level = 1;
  ObjectId domain = 0;
  Formula formula;
  StateIndex defined_at = 0;
};

// DO = <concept, individual, state>, plus the attribute snapshot at that state.
struct DataObject {
  ObjectId concept_id = 0;
  ObjectId individual = 0;
  StateIndex state = 0;
  ValueMap values;

  nlohmann::json to_json() const;
};

struct TowerConfig {
  int max_level = 3;
};

// Primitive store mutations. Every accepted event folds into a list of these
// at a single state; replay folds the same list from the log.
struct DefineConceptEffect {
  ObjectId id = 0;
  std::string name;
  std::vector<AttributeSpec> attributes;
  std::string origin;
};
struct ExtendConceptEffect {
  ObjectId concept_id = 0;
  std::vector<AttributeSpec> attributes;
};
struct CreateEffect {
  ObjectId id = 0;
  ObjectId concept_id = 0;
  ValueMap values;
};
struct SetEffect {
  ObjectId id = 0;
  ValueMap values;  // absent value unsets the attribute
};
struct RetireEffect {
  ObjectId id = 0;
};
struct DefineMetaEffect {
  ObjectId id = 0;
  std::string name;
  int level = 1;
  ObjectId domain = 0;
  std::string formula;
};
struct RegisterRuleEffect {
  Rule rule;
};
struct AddOverrideEffect {
  MandatoryOverride override_;
};
struct MarkPackEffect {
  ObjectId id = 0;
  std::string name;
  std::string version;
  std::string digest;
};
struct AuditEffect {
  std::string message;
};

using Effect = std::variant<DefineConceptEffect, ExtendConceptEffect, CreateEffect, SetEffect, RetireEffect,
                            DefineMetaEffect, RegisterRuleEffect, AddOverrideEffect, MarkPackEffect, AuditEffect>;

nlohmann::json effect_to_json(const Effect& effect);

// Lineage of a state: the descending, disjoint intervals of states whose
// effects are visible there. Rollback markers cut the lineage back to their
// target state.
struct Lineage {
  std::vector<std::pair<StateIndex, StateIndex>> intervals;
  bool contains(StateIndex s) const;
};

template <class T>
class Versioned {
 public:
  void put(StateIndex state, std::shared_ptr<const T> value) {
    if (!versions_.empty() && versions_.back().first == state) {
      versions_.back().second = std::move(value);
    } else {
      versions_.emplace_back(state, std::move(value));
    }
  }

  const T* at(const Lineage& lineage) const {
    for (const auto& [lo, hi] : lineage.intervals) {
      auto it = std::upper_bound(versions_.begin(), versions_.end(), hi,
                                 [](StateIndex s, const auto& v) { return s < v.first; });
      if (it == versions_.begin()) return nullptr;
      --it;
      if (it->first >= lo) return it->second.get();
    }
    return nullptr;
  }

  bool empty() const { return versions_.empty(); }

 private:
  std::vector<std::pair<StateIndex, std::shared_ptr<const T>>> versions_;
};

class Snapshot;

class Store {
 public:
  explicit Store(TowerConfig tower = {});

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  StateIndex head() const { return head_; }
  ObjectId next_id() const { return next_id_; }
  const TowerConfig& tower() const { return tower_; }

  Snapshot at(StateIndex state) const;
  Snapshot at_head() const;

  // Folds one accepted event. `state` must be head() + 1. Effects are
  // trusted: the engine validates them before they get here.
  void apply(StateIndex state, const std::vector<Effect>& effects);
  // Replay path: decode effects from their log form one at a time, so later
  // effects see the schema produced by earlier ones.
  void apply_json(StateIndex state, const nlohmann::json& effects);
  void apply_marker(StateIndex state, StateIndex to);

  Lineage lineage(StateIndex state) const;

  // Canonical content (concepts, attributes, every alive object and its
  // values) and its SHA-256. State stamps of records are excluded.
  nlohmann::json content(StateIndex state) const;
  std::string content_hash(StateIndex state) const;

  bool known_id(ObjectId id) const;

 private:
  friend class Snapshot;

  void apply_one(StateIndex state, const Effect& effect);
  Effect decode_effect(const nlohmann::json& j) const;
  const ConceptSchema* latest_schema(ObjectId concept_id) const;
  void put_record(ObjectId id, StateIndex state, std::shared_ptr<const ObjectRecord> rec);
  void bump_id(ObjectId id);
  void install_builtins();

  using MemoKey = std::pair<ObjectId, StateIndex>;
  struct MemoHash {
    std::size_t operator()(const MemoKey& k) const noexcept {
      return std::hash<std::int64_t>{}(k.first * 1000003 ^ k.second);
    }
  };

  TowerConfig tower_;
  StateIndex head_ = 0;
  ObjectId next_id_ = builtin::kFirstUserId;
  std::vector<std::pair<StateIndex, StateIndex>> markers_;  // (marker state, target), ascending
  std::vector<Versioned<ObjectRecord>> objects_;
  std::unordered_map<ObjectId, Versioned<ConceptSchema>> schemas_;
  std::unordered_map<ObjectId, std::vector<ObjectId>> members_;
  std::unordered_map<std::string, std::vector<ObjectId>> names_;
  std::unordered_map<ObjectId, std::shared_ptr<const MetaDef>> metas_;
  std::map<ObjectId, std::shared_ptr<const Rule>> rules_;
  std::map<ObjectId, std::shared_ptr<const MandatoryOverride>> overrides_;

  mutable std::mutex memo_mutex_;
  mutable std::unordered_map<MemoKey, std::shared_ptr<const std::vector<ObjectId>>, MemoHash> meta_memo_;
};

// Read view of the store at one state. Cheap to copy; valid while the store
// is not being appended to (the engine holds a shared lock around reads).
class Snapshot {
 public:
  Snapshot(const Store& store, StateIndex state);

  StateIndex state() const { return state_; }
  const Store& store() const { return *store_; }
  const Lineage& lineage() const { return lineage_; }

  // nullptr when the id has no record on this state's lineage.
  const ObjectRecord* record(ObjectId id) const;
  const ObjectRecord* alive(ObjectId id) const;

  const ConceptSchema* schema(ObjectId concept_id) const;
  const ConceptSchema& schema_or_throw(ObjectId concept_id) const;
  const MetaDef* meta(ObjectId id) const;

  // Concept or meta name -> id, for names alive at this state.
  std::optional<ObjectId> lookup(std::string_view name) const;
  ObjectId resolve_domain(std::string_view name) const;  // throws UnknownDomain
  std::string name_of(ObjectId id) const;

  bool is_concept(ObjectId id) const;
  bool is_meta(ObjectId id) const;

  // H_T(I): individuals of a concept alive at this state, ascending ids.
  std::vector<ObjectId> extent(ObjectId concept_id) const;
  DataObject get_object(ObjectId id) const;
  ObjectId individuate(const Formula& formula, ObjectId domain) const;

  // Members of a concept or meta (meta extents are memoized per state).
  std::vector<ObjectId> members(ObjectId domain) const;
  bool is_member(ObjectId object, ObjectId domain) const;
  std::vector<ObjectId> meta_extent(ObjectId meta) const;
  std::vector<ObjectId> compute_meta_extent(ObjectId meta) const;  // no memo
  DataObject describe(ObjectId id) const;

  // Levels: concepts are level 1, metas carry their stored level.
  int level(ObjectId domain) const;
  // Level of the objects a domain ranges over (0 for ordinary concepts).
  int member_level(ObjectId domain) const;
  // Concept whose schema describes the members of a domain.
  ObjectId member_concept(ObjectId domain) const;

  std::vector<const Rule*> rules() const;  // registration order
  std::vector<const MandatoryOverride*> overrides() const;
  std::vector<ObjectId> all_concepts() const;
  std::vector<ObjectId> all_metas() const;

 private:
  const Store* store_;
  StateIndex state_;
  Lineage lineage_;
};

}  // namespace unistore
