#include "unistore/store.hpp"

#include "unistore/digest.hpp"
#include "unistore/error.hpp"
#include "unistore/eval.hpp"

namespace unistore {

namespace {

nlohmann::json attribute_to_json(const AttributeSpec& a) {
  nlohmann::json j = {{"name", a.name}, {"type", std::string(type_name(a.type))}, {"required", a.required}};
  if (a.type == ValueType::Reference) j["target"] = a.target;
  return j;
}

AttributeSpec attribute_from_json(const nlohmann::json& j) {
  AttributeSpec a;
  a.name = j.at("name").get<std::string>();
  auto t = parse_type_name(j.at("type").get<std::string>());
  if (!t) throw Error(ErrorKind::CorruptLog, "unknown attribute type in log");
  a.type = *t;
  a.required = j.value("required", false);
  if (a.type == ValueType::Reference) a.target = j.at("target").get<ObjectId>();
  return a;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

AttributeSpec attr(std::string name, ValueType type) { return AttributeSpec{std::move(name), type, 0, false}; }

}  // namespace

const AttributeSpec* ConceptSchema::attribute(std::string_view attr_name) const {
  for (const auto& a : attributes)
    if (a.name == attr_name) return &a;
  return nullptr;
}

nlohmann::json DataObject::to_json() const {
  return {{"concept", concept_id}, {"individual", individual}, {"state", state}, {"values", unistore::to_json(values)}};
}

bool Lineage::contains(StateIndex s) const {
  for (const auto& [lo, hi] : intervals)
    if (s >= lo && s <= hi) return true;
  return false;
}

nlohmann::json effect_to_json(const Effect& effect) {
  return std::visit(
      [](const auto& e) -> nlohmann::json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, DefineConceptEffect>) {
          nlohmann::json attrs = nlohmann::json::array();
          for (const auto& a : e.attributes) attrs.push_back(attribute_to_json(a));
          return {{"op", "define_concept"}, {"id", e.id}, {"name", e.name}, {"attributes", attrs}, {"origin", e.origin}};
        } else if constexpr (std::is_same_v<T, ExtendConceptEffect>) {
          nlohmann::json attrs = nlohmann::json::array();
          for (const auto& a : e.attributes) attrs.push_back(attribute_to_json(a));
          return {{"op", "extend_concept"}, {"concept", e.concept_id}, {"attributes", attrs}};
        } else if constexpr (std::is_same_v<T, CreateEffect>) {
          return {{"op", "create"}, {"id", e.id}, {"concept", e.concept_id}, {"values", to_json(e.values)}};
        } else if constexpr (std::is_same_v<T, SetEffect>) {
          return {{"op", "set"}, {"id", e.id}, {"values", to_json(e.values)}};
        } else if constexpr (std::is_same_v<T, RetireEffect>) {
          return {{"op", "retire"}, {"id", e.id}};
        } else if constexpr (std::is_same_v<T, DefineMetaEffect>) {
          return {{"op", "define_meta"}, {"id", e.id},         {"name", e.name},
                  {"level", e.level},    {"domain", e.domain}, {"formula", e.formula}};
        } else if constexpr (std::is_same_v<T, RegisterRuleEffect>) {
          return {{"op", "register_rule"}, {"id", e.rule.id}, {"rule", e.rule.definition()}};
        } else if constexpr (std::is_same_v<T, AddOverrideEffect>) {
          return {{"op", "add_override"}, {"id", e.override_.id}, {"override", e.override_.definition()}};
        } else if constexpr (std::is_same_v<T, MarkPackEffect>) {
          return {{"op", "mark_pack"}, {"id", e.id}, {"name", e.name}, {"version", e.version}, {"digest", e.digest}};
        } else {
          return {{"op", "audit"}, {"message", e.message}};
        }
      },
      effect);
}

// ---------------------------------------------------------------------------
// Store

Store::Store(TowerConfig tower) : tower_(tower) { install_builtins(); }

void Store::install_builtins() {
  using VT = ValueType;
  const std::vector<std::pair<ObjectId, DefineConceptEffect>> defs = {
      {builtin::kConcept,
       {builtin::kConcept,
        "Concept",
        {attr("name", VT::Text), attr("level", VT::Integer), attr("defined_at", VT::Integer), attr("origin", VT::Text)},
        "builtin"}},
      {builtin::kMetaObject,
       {builtin::kMetaObject,
        "MetaObject",
        {attr("name", VT::Text), attr("level", VT::Integer), attr("formula", VT::Text), attr("domain", VT::Text),
         attr("defined_at", VT::Integer), attr("audited", VT::Boolean), attr("description", VT::Text)},
        "builtin"}},
      {builtin::kRule,
       {builtin::kRule,
        "Rule",
        {attr("trigger", VT::Text), attr("concept", VT::Text), attr("guard", VT::Text), attr("actions", VT::Text),
         attr("origin", VT::Text), attr("registered_at", VT::Integer)},
        "builtin"}},
      {builtin::kMandatoryOverride,
       {builtin::kMandatoryOverride,
        "MandatoryOverride",
        {attr("concept", VT::Text), attr("condition", VT::Text), attr("attributes", VT::Text),
         attr("scenarios", VT::Text), attr("origin", VT::Text)},
        "builtin"}},
      {builtin::kAppraisalParams,
       {builtin::kAppraisalParams,
        "AppraisalParams",
        {attr("w_s", VT::Decimal), attr("w_p", VT::Decimal), attr("w_local", VT::Decimal), attr("w_child", VT::Decimal)},
        "builtin"}},
      {builtin::kPack,
       {builtin::kPack,
        "Pack",
        {attr("name", VT::Text), attr("version", VT::Text), attr("digest", VT::Text), attr("applied_at", VT::Integer)},
        "builtin"}},
  };
  for (const auto& [id, def] : defs) apply_one(0, def);
  apply_one(0, CreateEffect{builtin::kParamsObject,
                            builtin::kAppraisalParams,
                            {{"w_s", 0.5}, {"w_p", 0.5}, {"w_local", 0.5}, {"w_child", 0.5}}});
  next_id_ = builtin::kFirstUserId;
}

Snapshot Store::at(StateIndex state) const {
  if (state < 0 || state > head_)
    throw Error(ErrorKind::StateBeyondHead,
                "state " + std::to_string(state) + " is beyond head " + std::to_string(head_),
                {{"state", state}, {"head", head_}});
  return Snapshot(*this, state);
}

Snapshot Store::at_head() const { return Snapshot(*this, head_); }

Lineage Store::lineage(StateIndex state) const {
  Lineage lin;
  StateIndex cur = state;
  while (true) {
    auto it = std::upper_bound(markers_.begin(), markers_.end(), cur,
                               [](StateIndex s, const auto& m) { return s < m.first; });
    if (it == markers_.begin()) {
      lin.intervals.emplace_back(0, cur);
      break;
    }
    --it;
    if (it->first < cur) lin.intervals.emplace_back(it->first + 1, cur);
    cur = it->second;
  }
  return lin;
}

bool Store::known_id(ObjectId id) const {
  return id > 0 && id < static_cast<ObjectId>(objects_.size()) && !objects_[id].empty();
}

void Store::bump_id(ObjectId id) {
  if (id >= next_id_) next_id_ = id + 1;
}

void Store::put_record(ObjectId id, StateIndex state, std::shared_ptr<const ObjectRecord> rec) {
  if (id >= static_cast<ObjectId>(objects_.size())) objects_.resize(id + 1);
  objects_[id].put(state, std::move(rec));
  bump_id(id);
}

void Store::apply(StateIndex state, const std::vector<Effect>& effects) {
  if (state != head_ + 1) throw Error(ErrorKind::CorruptLog, "non-consecutive state " + std::to_string(state));
  for (const auto& e : effects) apply_one(state, e);
  head_ = state;
}

void Store::apply_json(StateIndex state, const nlohmann::json& effects) {
  if (state != head_ + 1) throw Error(ErrorKind::CorruptLog, "non-consecutive state " + std::to_string(state));
  // Effects of this state are visible to later effects of the same state.
  head_ = state;
  try {
    for (const auto& j : effects) apply_one(state, decode_effect(j));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::CorruptLog, std::string("malformed effect at state ") + std::to_string(state) + ": " + ex.what(),
                {{"seq", state}});
  }
}

void Store::apply_marker(StateIndex state, StateIndex to) {
  if (state != head_ + 1 || to < 0 || to >= state)
    throw Error(ErrorKind::CorruptLog, "invalid rollback marker at state " + std::to_string(state));
  markers_.emplace_back(state, to);
  head_ = state;
}

const ConceptSchema* Store::latest_schema(ObjectId concept_id) const {
  auto it = schemas_.find(concept_id);
  if (it == schemas_.end()) return nullptr;
  return it->second.at(lineage(head_));
}

Effect Store::decode_effect(const nlohmann::json& j) const {
  const auto op = j.at("op").get<std::string>();
  const Snapshot snap(*this, head_);
  auto decode_values = [&](ObjectId concept_id, const nlohmann::json& values) {
    const auto* schema = snap.schema(concept_id);
    if (!schema) throw Error(ErrorKind::CorruptLog, "effect references unknown concept_id " + std::to_string(concept_id));
    ValueMap out;
    for (const auto& [k, v] : values.items()) {
      const auto* spec = schema->attribute(k);
      if (!spec) throw Error(ErrorKind::CorruptLog, "effect references unknown attribute " + k);
      out[k] = value_from_json(v, *spec);
    }
    return out;
  };
  if (op == "define_concept") {
    DefineConceptEffect e{j.at("id").get<ObjectId>(), j.at("name").get<std::string>(), {}, j.value("origin", "")};
    for (const auto& a : j.at("attributes")) e.attributes.push_back(attribute_from_json(a));
    return e;
  }
  if (op == "extend_concept") {
    ExtendConceptEffect e{j.at("concept").get<ObjectId>(), {}};
    for (const auto& a : j.at("attributes")) e.attributes.push_back(attribute_from_json(a));
    return e;
  }
  if (op == "create") {
    const ObjectId concept_id = j.at("concept").get<ObjectId>();
    return CreateEffect{j.at("id").get<ObjectId>(), concept_id, decode_values(concept_id, j.at("values"))};
  }
  if (op == "set") {
    const ObjectId id = j.at("id").get<ObjectId>();
    const auto* rec = snap.record(id);
    if (!rec) throw Error(ErrorKind::CorruptLog, "set on unknown object " + std::to_string(id));
    return SetEffect{id, decode_values(rec->concept_id, j.at("values"))};
  }
  if (op == "retire") return RetireEffect{j.at("id").get<ObjectId>()};
  if (op == "define_meta") {
    return DefineMetaEffect{j.at("id").get<ObjectId>(), j.at("name").get<std::string>(), j.at("level").get<int>(),
                            j.at("domain").get<ObjectId>(), j.at("formula").get<std::string>()};
  }
  if (op == "register_rule") {
    Rule r = Rule::from_definition(j.at("rule"));
    r.id = j.at("id").get<ObjectId>();
    return RegisterRuleEffect{std::move(r)};
  }
  if (op == "add_override") {
    MandatoryOverride o = MandatoryOverride::from_definition(j.at("override"));
    o.id = j.at("id").get<ObjectId>();
    return AddOverrideEffect{std::move(o)};
  }
  if (op == "mark_pack") {
    return MarkPackEffect{j.at("id").get<ObjectId>(), j.at("name").get<std::string>(),
                          j.at("version").get<std::string>(), j.at("digest").get<std::string>()};
  }
  if (op == "audit") return AuditEffect{j.at("message").get<std::string>()};
  throw Error(ErrorKind::CorruptLog, "unknown effect op '" + op + "'");
}

void Store::apply_one(StateIndex state, const Effect& effect) {
  const Lineage lin = lineage(state);
  auto current = [&](ObjectId id) -> const ObjectRecord* {
    if (id <= 0 || id >= static_cast<ObjectId>(objects_.size())) return nullptr;
    return objects_[id].at(lin);
  };
  auto new_record = [&](ObjectId concept_id, ValueMap values) {
    auto rec = std::make_shared<ObjectRecord>();
    rec->concept_id = concept_id;
    rec->created_at = state;
    rec->values = std::move(values);
    return rec;
  };
  auto add_named_object = [&](ObjectId id, ObjectId concept_id, const std::string& name, ValueMap values) {
    put_record(id, state, new_record(concept_id, std::move(values)));
    members_[concept_id].push_back(id);
    names_[name].push_back(id);
  };

  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, DefineConceptEffect>) {
          auto schema = std::make_shared<ConceptSchema>(ConceptSchema{e.id, e.name, e.attributes, state, e.origin});
          schemas_[e.id].put(state, std::move(schema));
          add_named_object(e.id, builtin::kConcept, e.name,
                           {{"name", e.name},
                            {"level", std::int64_t{1}},
                            {"defined_at", static_cast<std::int64_t>(state)},
                            {"origin", e.origin}});
        } else if constexpr (std::is_same_v<T, ExtendConceptEffect>) {
          const auto* prev = schemas_.at(e.concept_id).at(lin);
          auto schema = std::make_shared<ConceptSchema>(*prev);
          for (const auto& a : e.attributes) schema->attributes.push_back(a);
          schemas_[e.concept_id].put(state, std::move(schema));
        } else if constexpr (std::is_same_v<T, CreateEffect>) {
          put_record(e.id, state, new_record(e.concept_id, e.values));
          members_[e.concept_id].push_back(e.id);
        } else if constexpr (std::is_same_v<T, SetEffect>) {
          const auto* prev = current(e.id);
          auto rec = std::make_shared<ObjectRecord>(*prev);
          for (const auto& [k, v] : e.values) {
            if (is_absent(v)) {
              rec->values.erase(k);
            } else {
              rec->values[k] = v;
            }
          }
          put_record(e.id, state, std::move(rec));
        } else if constexpr (std::is_same_v<T, RetireEffect>) {
          const auto* prev = current(e.id);
          auto rec = std::make_shared<ObjectRecord>(*prev);
          rec->alive = false;
          rec->retired_at = state;
          put_record(e.id, state, std::move(rec));
        } else if constexpr (std::is_same_v<T, DefineMetaEffect>) {
          auto def = std::make_shared<MetaDef>(
              MetaDef{e.id, e.name, e.level, e.domain, Formula::parse(e.formula), state});
          const auto* domain_rec = current(e.domain);
          std::string domain_name;
          if (domain_rec) {
            auto it = domain_rec->values.find("name");
            if (it != domain_rec->values.end()) domain_name = to_display(it->second);
          }
          const std::string text = def->formula.print();
          metas_[e.id] = std::move(def);
          add_named_object(e.id, builtin::kMetaObject, e.name,
                           {{"name", e.name},
                            {"level", std::int64_t{e.level}},
                            {"formula", text},
                            {"domain", domain_name},
                            {"defined_at", static_cast<std::int64_t>(state)}});
        } else if constexpr (std::is_same_v<T, RegisterRuleEffect>) {
          auto rule = std::make_shared<Rule>(e.rule);
          rule->registered_at = state;
          ValueMap values{{"trigger", rule->trigger},
                          {"guard", rule->guard.print()},
                          {"actions", rule->definition().at("actions").dump()},
                          {"registered_at", static_cast<std::int64_t>(state)}};
          if (!rule->subject_concept.empty()) values["concept"] = rule->subject_concept;
          if (!rule->origin.empty()) values["origin"] = rule->origin;
          rules_[rule->id] = rule;
          put_record(rule->id, state, new_record(builtin::kRule, std::move(values)));
          members_[builtin::kRule].push_back(rule->id);
        } else if constexpr (std::is_same_v<T, AddOverrideEffect>) {
          auto ov = std::make_shared<MandatoryOverride>(e.override_);
          ValueMap values{{"concept", ov->concept_name},
                          {"condition", ov->condition.print()},
                          {"attributes", join_list(ov->attributes)}};
          if (!ov->scenarios.empty()) values["scenarios"] = join_list(ov->scenarios);
          if (!ov->origin.empty()) values["origin"] = ov->origin;
          overrides_[ov->id] = ov;
          put_record(ov->id, state, new_record(builtin::kMandatoryOverride, std::move(values)));
          members_[builtin::kMandatoryOverride].push_back(ov->id);
        } else if constexpr (std::is_same_v<T, MarkPackEffect>) {
          put_record(e.id, state,
                     new_record(builtin::kPack, {{"name", e.name},
                                                 {"version", e.version},
                                                 {"digest", e.digest},
                                                 {"applied_at", static_cast<std::int64_t>(state)}}));
          members_[builtin::kPack].push_back(e.id);
        } else {
          // Audit entries live in the log only.
        }
      },
      effect);
}

nlohmann::json Store::content(StateIndex state) const {
  const Snapshot snap = at(state);
  nlohmann::json objects = nlohmann::json::array();
  nlohmann::json schemas = nlohmann::json::array();
  for (ObjectId id = 1; id < static_cast<ObjectId>(objects_.size()); ++id) {
    const auto* rec = snap.alive(id);
    if (!rec) continue;
    ValueMap values = rec->values;
    values.erase("defined_at");
    values.erase("registered_at");
    values.erase("applied_at");
    objects.push_back({{"id", id}, {"concept", rec->concept_id}, {"values", to_json(values)}});
    if (rec->concept_id == builtin::kConcept) {
      const auto* schema = snap.schema(id);
      nlohmann::json attrs = nlohmann::json::array();
      for (const auto& a : schema->attributes) attrs.push_back(attribute_to_json(a));
      schemas.push_back({{"id", id}, {"name", schema->name}, {"attributes", attrs}, {"origin", schema->origin}});
    }
  }
  return {{"objects", objects}, {"schemas", schemas}};
}

std::string Store::content_hash(StateIndex state) const { return sha256_hex(content(state).dump()); }

// ---------------------------------------------------------------------------
// Snapshot

Snapshot::Snapshot(const Store& store, StateIndex state)
    : store_(&store), state_(state), lineage_(store.lineage(state)) {}

const ObjectRecord* Snapshot::record(ObjectId id) const {
  if (id <= 0 || id >= static_cast<ObjectId>(store_->objects_.size())) return nullptr;
  return store_->objects_[id].at(lineage_);
}

const ObjectRecord* Snapshot::alive(ObjectId id) const {
  const auto* rec = record(id);
  return rec && rec->alive ? rec : nullptr;
}

const ConceptSchema* Snapshot::schema(ObjectId concept_id) const {
  const auto* rec = alive(concept_id);
  if (!rec || rec->concept_id != builtin::kConcept) return nullptr;
  auto it = store_->schemas_.find(concept_id);
  return it == store_->schemas_.end() ? nullptr : it->second.at(lineage_);
}

const ConceptSchema& Snapshot::schema_or_throw(ObjectId concept_id) const {
  const auto* s = schema(concept_id);
  if (!s)
    throw Error(ErrorKind::UnknownConcept, "concept " + std::to_string(concept_id) + " is not defined at state " +
                                               std::to_string(state_),
                {{"concept", concept_id}, {"state", state_}});
  return *s;
}

const MetaDef* Snapshot::meta(ObjectId id) const {
  const auto* rec = alive(id);
  if (!rec || rec->concept_id != builtin::kMetaObject) return nullptr;
  auto it = store_->metas_.find(id);
  return it == store_->metas_.end() ? nullptr : it->second.get();
}

bool Snapshot::is_concept(ObjectId id) const { return schema(id) != nullptr; }
bool Snapshot::is_meta(ObjectId id) const { return meta(id) != nullptr; }

std::optional<ObjectId> Snapshot::lookup(std::string_view name) const {
  auto it = store_->names_.find(std::string(name));
  if (it == store_->names_.end()) return std::nullopt;
  for (auto id = it->second.rbegin(); id != it->second.rend(); ++id)
    if (alive(*id)) return *id;
  return std::nullopt;
}

ObjectId Snapshot::resolve_domain(std::string_view name) const {
  auto id = lookup(name);
  if (!id)
    throw Error(ErrorKind::UnknownDomain, "no concept_id or meta named '" + std::string(name) + "' at state " +
                                              std::to_string(state_),
                {{"domain", std::string(name)}, {"state", state_}});
  return *id;
}

std::string Snapshot::name_of(ObjectId id) const {
  const auto* rec = record(id);
  if (!rec) return {};
  auto it = rec->values.find("name");
  return it == rec->values.end() ? std::string{} : to_display(it->second);
}

std::vector<ObjectId> Snapshot::extent(ObjectId concept_id) const {
  schema_or_throw(concept_id);
  std::vector<ObjectId> out;
  auto it = store_->members_.find(concept_id);
  if (it == store_->members_.end()) return out;
  for (ObjectId id : it->second) {
    const auto* rec = alive(id);
    if (rec && rec->concept_id == concept_id) out.push_back(id);
  }
  return out;
}

DataObject Snapshot::get_object(ObjectId id) const {
  if (!store_->known_id(id)) throw Error(ErrorKind::UnknownId, "unknown id " + std::to_string(id), {{"id", id}});
  const auto* rec = alive(id);
  if (!rec)
    throw Error(ErrorKind::NotAliveAtState,
                "object " + std::to_string(id) + " is not alive at state " + std::to_string(state_),
                {{"id", id}, {"state", state_}});
  return DataObject{rec->concept_id, id, state_, rec->values};
}

DataObject Snapshot::describe(ObjectId id) const {
  const auto* rec = alive(id);
  if (!rec) throw Error(ErrorKind::UnknownId, "unknown id " + std::to_string(id) + " at state " + std::to_string(state_), {{"id", id}});
  return DataObject{rec->concept_id, id, state_, rec->values};
}

ObjectId Snapshot::individuate(const Formula& formula, ObjectId domain) const {
  typecheck(formula, member_concept(domain), *this);
  std::vector<ObjectId> matches;
  for (ObjectId m : members(domain)) {
    if (evaluate(formula, m, *this)) matches.push_back(m);
  }
  if (matches.empty())
    throw Error(ErrorKind::NoneSatisfies, "no object satisfies '" + formula.print() + "'", {{"count", 0}});
  if (matches.size() > 1)
    throw Error(ErrorKind::Ambiguous,
                std::to_string(matches.size()) + " objects satisfy '" + formula.print() + "'",
                {{"count", matches.size()}});
  return matches.front();
}

std::vector<ObjectId> Snapshot::members(ObjectId domain) const {
  if (is_concept(domain)) return extent(domain);
  if (is_meta(domain)) return meta_extent(domain);
  throw Error(ErrorKind::UnknownDomain, "id " + std::to_string(domain) + " is not a domain at state " +
                                            std::to_string(state_),
              {{"domain", domain}});
}

bool Snapshot::is_member(ObjectId object, ObjectId domain) const {
  if (is_concept(domain)) {
    const auto* rec = alive(object);
    return rec && rec->concept_id == domain;
  }
  const auto ext = meta_extent(domain);
  return std::binary_search(ext.begin(), ext.end(), object);
}

int Snapshot::level(ObjectId domain) const {
  if (is_concept(domain)) return 1;
  if (const auto* m = meta(domain)) return m->level;
  throw Error(ErrorKind::UnknownDomain, "id " + std::to_string(domain) + " is not a domain", {{"domain", domain}});
}

int Snapshot::member_level(ObjectId domain) const {
  if (is_concept(domain)) return builtin::is_builtin_concept(domain) ? 1 : 0;
  if (const auto* m = meta(domain)) return m->level - 1;
  throw Error(ErrorKind::UnknownDomain, "id " + std::to_string(domain) + " is not a domain", {{"domain", domain}});
}

ObjectId Snapshot::member_concept(ObjectId domain) const {
  for (int guard = 0; guard < 64; ++guard) {
    if (is_concept(domain)) return domain;
    const auto* m = meta(domain);
    if (!m) break;
    domain = m->domain;
  }
  throw Error(ErrorKind::UnknownDomain, "id " + std::to_string(domain) + " is not a domain", {{"domain", domain}});
}

std::vector<const Rule*> Snapshot::rules() const {
  std::vector<const Rule*> out;
  for (const auto& [id, rule] : store_->rules_)
    if (alive(id)) out.push_back(rule.get());
  return out;
}

std::vector<const MandatoryOverride*> Snapshot::overrides() const {
  std::vector<const MandatoryOverride*> out;
  for (const auto& [id, ov] : store_->overrides_)
    if (alive(id)) out.push_back(ov.get());
  return out;
}

std::vector<ObjectId> Snapshot::all_concepts() const { return extent(builtin::kConcept); }
std::vector<ObjectId> Snapshot::all_metas() const { return extent(builtin::kMetaObject); }

}  // namespace unistore
