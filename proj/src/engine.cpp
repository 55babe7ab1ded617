#include "unistore/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <mutex>

#include "unistore/digest.hpp"
#include "unistore/error.hpp"
#include "unistore/eval.hpp"
#include "unistore/org.hpp"
#include "unistore/tower.hpp"

namespace unistore {

namespace {

using nlohmann::json;

const std::vector<std::string> kKinds = {
    "define_concept", "extend_concept", "create",        "set_attr",    "retire",       "batch",
    "hire",           "transfer",       "dismiss",       "re_enroll",   "leave_request", "comprehend",
    "rule_register",  "add_override",   "pack_begin",    "pack_end"};

bool is_identifier(std::string_view s) {
  static const std::vector<std::string_view> reserved = {"and", "or",    "not",  "exists", "in",
                                                         "true", "false", "null", "date",   "self"};
  if (s.empty() || s.size() > 128) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return std::find(reserved.begin(), reserved.end(), s) == reserved.end();
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void deny(const Decision& d, json details = json::object()) {
  details["reason"] = d.reason;
  throw Error(ErrorKind::AccessDenied, "access denied: " + d.reason, std::move(details));
}

void require(const Decision& d, json details = json::object()) {
  if (!d) deny(d, std::move(details));
}

std::optional<ObjectId> ref_value(const ValueMap& values, const std::string& attr) {
  auto it = values.find(attr);
  if (it == values.end()) return std::nullopt;
  if (const auto* r = std::get_if<Ref>(&it->second)) return r->id;
  return std::nullopt;
}

// Collects field-level problems of one payload and raises them together.
struct Problems {
  json list = json::array();

  void add(const std::string& field, const std::string& problem) {
    list.push_back({{"field", field}, {"problem", problem}});
  }
  bool mentions(const std::string& field) const {
    for (const auto& p : list)
      if (p.at("field") == field) return true;
    return false;
  }
  void raise_if_any() const {
    if (list.empty()) return;
    std::string msg = "validation failed:";
    for (const auto& p : list)
      msg += " " + p.at("field").get<std::string>() + " (" + p.at("problem").get<std::string>() + ")";
    throw Error(ErrorKind::Validation, msg, {{"fields", list}});
  }
};

// Turns one request into the primitive effects of a single state, running
// trigger rules against the pre-event snapshot.
class EventBuilder {
 public:
  EventBuilder(const Snapshot& snap, ObjectId next_id, StateIndex state, const Session& session,
               const TowerConfig& tower)
      : snap_(snap), next_id_(next_id), state_(state), session_(session), tower_(tower) {}

  std::vector<Effect> effects;
  std::vector<ObjectId> created;
  std::vector<std::string> audit;

  void run(const std::string& kind, const json& payload) {
    if (!payload.is_object()) throw Error(ErrorKind::Validation, "event payload must be an object");
    if (kind == "define_concept") return define_concept(payload);
    if (kind == "extend_concept") return extend_concept(payload);
    if (kind == "comprehend") return comprehend(payload);
    if (kind == "rule_register") return rule_register(payload);
    if (kind == "add_override") return add_override(payload);
    if (kind == "pack_begin" || kind == "pack_end") return pack_mark(kind, payload);
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end())
      throw Error(ErrorKind::UnknownKind, "unknown event kind '" + kind + "'", {{"kind", kind}});
    require(check_event(session_, kind), {{"kind", kind}});
    if (kind == "create") return create(payload);
    if (kind == "set_attr") return set_attr(payload);
    if (kind == "retire") return retire(payload);
    if (kind == "batch") return batch(payload);
    if (kind == "hire") return hire(payload);
    if (kind == "transfer") return transfer(payload);
    if (kind == "dismiss") return dismiss(payload);
    if (kind == "re_enroll") return re_enroll(payload);
    if (kind == "leave_request") return leave_request(payload);
  }

 private:
  ObjectId allocate() {
    const ObjectId id = next_id_++;
    created.push_back(id);
    return id;
  }

  void require_admin() const {
    if (session_.closed) throw Error(ErrorKind::SessionClosed, "session is closed");
    if (!session_.profile.metadata_admin) deny(Decision::deny("metadata_admin required"));
  }

  ObjectId concept_by_name(const std::string& name) const {
    auto id = snap_.lookup(name);
    if (!id || !snap_.is_concept(*id))
      throw Error(ErrorKind::UnknownConcept, "concept '" + name + "' is not defined at state " +
                                                 std::to_string(snap_.state()),
                  {{"concept", name}});
    return *id;
  }

  ObjectId resolve_concept(const json& j) const {
    if (j.is_string()) return concept_by_name(j.get<std::string>());
    if (j.is_number_integer() && snap_.is_concept(j.get<ObjectId>())) return j.get<ObjectId>();
    throw Error(ErrorKind::UnknownConcept, "unknown concept " + j.dump(), {{"concept", j}});
  }

  ObjectId data_concept(const json& j) const {
    const ObjectId c = resolve_concept(j);
    if (builtin::is_builtin_concept(c))
      throw Error(ErrorKind::Validation, "metadata objects are created through metadata events",
                  {{"concept", snap_.name_of(c)}});
    return c;
  }

  // Alive object of the given concept at the pre-event state.
  ObjectId object_of(const json& j, ObjectId concept_id, const char* field) const {
    if (!j.is_number_integer()) throw Error(ErrorKind::Validation, std::string("'") + field + "' must be an id");
    const ObjectId id = j.get<ObjectId>();
    const DataObject obj = snap_.get_object(id);
    if (obj.concept_id != concept_id)
      throw Error(ErrorKind::Validation, std::string("'") + field + "' is not a " + snap_.name_of(concept_id),
                  {{"field", field}, {"id", id}});
    return id;
  }

  bool reference_ok(ObjectId target, ObjectId concept_id) const {
    if (auto it = pending_.find(target); it != pending_.end()) return it->second == concept_id;
    const auto* rec = snap_.alive(target);
    return rec && rec->concept_id == concept_id;
  }

  ValueMap decode(const ConceptSchema& schema, const json& values, Problems& problems) const {
    ValueMap out;
    if (values.is_null()) return out;
    if (!values.is_object()) {
      problems.add("values", "must be an object");
      return out;
    }
    for (const auto& [name, v] : values.items()) {
      const auto* spec = schema.attribute(name);
      if (!spec) {
        problems.add(name, "unknown attribute of " + schema.name);
        continue;
      }
      try {
        Value value = value_from_json(v, *spec);
        if (const auto* r = std::get_if<Ref>(&value); r && !reference_ok(r->id, spec->target)) {
          problems.add(name, "dangling reference to " + snap_.name_of(spec->target) + " " + std::to_string(r->id));
          continue;
        }
        out[name] = std::move(value);
      } catch (const Error&) {
        problems.add(name, "expected " + std::string(type_name(spec->type)));
      }
    }
    return out;
  }

  void check_mandatory(ObjectId concept_id, const ValueMap& values, Problems& problems) const {
    for (const auto& field : required_fields(session_.profile.scenario, concept_id, snap_, values)) {
      auto it = values.find(field);
      if ((it == values.end() || is_absent(it->second)) && !problems.mentions(field)) problems.add(field, "required");
    }
  }

  void set_if_attr(const ConceptSchema& schema, ValueMap& values, const std::string& attr, Value v) const {
    if (schema.attribute(attr)) values[attr] = std::move(v);
  }

  // ---- trigger rules -------------------------------------------------------

  void fire(const std::string& kind, ObjectId subject_concept, const Subject& subject, ObjectId subject_id) {
    const std::string concept_name = snap_.name_of(subject_concept);
    for (const Rule* rule : snap_.rules()) {
      if (rule->trigger != kind) continue;
      if (!rule->subject_concept.empty() && rule->subject_concept != concept_name) continue;
      if (!rule->guard.empty() && !evaluate(rule->guard, Binding{subject, {}}, snap_)) continue;
      for (const auto& action : rule->actions) apply_action(*rule, action, subject_concept, subject_id);
    }
  }

  void apply_action(const Rule& rule, const RuleAction& action, ObjectId subject_concept, ObjectId subject_id) {
    switch (action.kind) {
      case RuleAction::Kind::Reject:
        throw Error(ErrorKind::RuleRejection, action.message, {{"rule", rule.id}, {"message", action.message}});
      case RuleAction::Kind::Audit:
        effects.push_back(AuditEffect{action.message});
        audit.push_back(action.message);
        return;
      case RuleAction::Kind::SetAttr: {
        const auto& schema = snap_.schema_or_throw(subject_concept);
        const std::string attr = action.path.rfind("self.", 0) == 0 ? action.path.substr(5) : action.path;
        const auto* spec = schema.attribute(attr);
        if (!spec) throw Error(ErrorKind::UnknownAttribute, "rule " + std::to_string(rule.id) + " sets unknown " + attr);
        effects.push_back(SetEffect{subject_id, {{attr, value_from_json(action.value, *spec)}}});
        return;
      }
      case RuleAction::Kind::CreateIndividual: {
        const ObjectId c = concept_by_name(action.concept_name);
        const auto& schema = snap_.schema_or_throw(c);
        ValueMap values;
        for (const auto& [name, v] : action.values.items()) {
          const auto* spec = schema.attribute(name);
          if (!spec) throw Error(ErrorKind::UnknownAttribute, "rule " + std::to_string(rule.id) + " sets unknown " + name);
          values[name] = v == "$self" ? Value{Ref{subject_id}} : value_from_json(v, *spec);
        }
        const ObjectId id = allocate();
        pending_[id] = c;
        effects.push_back(CreateEffect{id, c, std::move(values)});
        return;
      }
    }
  }

  // ---- data events ---------------------------------------------------------

  void create(const json& p) {
    const ObjectId c = data_concept(p.at("concept"));
    require(check_concept(session_, Action::Write, c, snap_), {{"concept", snap_.name_of(c)}});
    const auto& schema = snap_.schema_or_throw(c);
    Problems problems;
    ValueMap values = decode(schema, p.value("values", json::object()), problems);
    require(check_draft(session_, c, values, snap_), {{"concept", schema.name}});
    check_mandatory(c, values, problems);
    problems.raise_if_any();
    const ObjectId id = allocate();
    pending_[id] = c;
    effects.push_back(CreateEffect{id, c, values});
    fire("create", c, Subject::of_draft(c, values), id);
  }

  void set_attr(const json& p) {
    const ObjectId id = p.at("id").get<ObjectId>();
    const DataObject obj = snap_.get_object(id);
    if (builtin::is_builtin_concept(obj.concept_id)) return set_metadata(id, obj, p.value("values", json::object()));
    require(check_access(session_, Action::Write, id, snap_), {{"id", id}});
    const auto& schema = snap_.schema_or_throw(obj.concept_id);
    Problems problems;
    ValueMap values = decode(schema, p.value("values", json::object()), problems);
    for (const auto& [name, v] : values) {
      if (is_absent(v) && schema.attribute(name)->required) problems.add(name, "required");
    }
    problems.raise_if_any();
    ValueMap merged = obj.values;
    for (const auto& [k, v] : values) merged[k] = v;
    require(check_draft(session_, obj.concept_id, merged, snap_), {{"id", id}});
    effects.push_back(SetEffect{id, values});
    fire("set_attr", obj.concept_id, Subject::object(id), id);
  }

  void set_metadata(ObjectId id, const DataObject& obj, const json& raw) {
    require_admin();
    const auto& schema = snap_.schema_or_throw(obj.concept_id);
    Problems problems;
    ValueMap values = decode(schema, raw, problems);
    problems.raise_if_any();
    if (obj.concept_id == builtin::kAppraisalParams) {
      ValueMap merged = obj.values;
      for (const auto& [k, v] : values) merged[k] = v;
      auto weight = [&](const char* k) {
        auto it = merged.find(k);
        return it == merged.end() || is_absent(it->second) ? std::nan("") : std::get<double>(it->second);
      };
      const double ws = weight("w_s"), wp = weight("w_p"), wl = weight("w_local"), wc = weight("w_child");
      for (double w : {ws, wp, wl, wc})
        if (!(w >= 0.0 && w <= 1.0))
          throw Error(ErrorKind::InvalidParams, "appraisal weights must lie in [0,1]", {{"values", to_json(merged)}});
      if (std::abs(ws + wp - 1.0) > 1e-9 || std::abs(wl + wc - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidParams, "appraisal weights must satisfy w_s + w_p = 1 and w_local + w_child = 1",
                    {{"values", to_json(merged)}});
    } else if (obj.concept_id == builtin::kMetaObject) {
      for (const auto& [k, v] : values)
        if (k != "audited" && k != "description") problems.add(k, "read-only metadata attribute");
    } else {
      for (const auto& [k, v] : values) problems.add(k, "read-only metadata attribute");
    }
    problems.raise_if_any();
    effects.push_back(SetEffect{id, values});
  }

  void retire(const json& p) {
    const ObjectId id = p.at("id").get<ObjectId>();
    const DataObject obj = snap_.get_object(id);
    if (builtin::is_builtin_concept(obj.concept_id)) {
      require_admin();
      if (obj.concept_id != builtin::kRule && obj.concept_id != builtin::kMandatoryOverride)
        throw Error(ErrorKind::Validation, "only rules and mandatory overrides can be retired among metadata",
                    {{"id", id}});
      effects.push_back(RetireEffect{id});
      return;
    }
    require(check_access(session_, Action::Write, id, snap_), {{"id", id}});
    effects.push_back(RetireEffect{id});
    fire("retire", obj.concept_id, Subject::object(id), id);
  }

  void batch(const json& p) {
    const auto& events = p.at("events");
    if (!events.is_array()) throw Error(ErrorKind::Validation, "'events' must be a list");
    for (const auto& e : events) {
      const std::string kind = e.at("kind").get<std::string>();
      if (kind != "create" && kind != "set_attr" && kind != "retire")
        throw Error(ErrorKind::Validation, "batch may only contain create, set_attr and retire", {{"kind", kind}});
      require(check_event(session_, kind), {{"kind", kind}});
      if (kind == "create") create(e);
      if (kind == "set_attr") set_attr(e);
      if (kind == "retire") retire(e);
    }
  }

  // ---- personnel dynamics --------------------------------------------------

  std::optional<ObjectId> held_position(ObjectId employee) const {
    const ObjectId pos_c = concept_by_name("Position");
    for (ObjectId p : snap_.extent(pos_c)) {
      if (ref_value(snap_.alive(p)->values, "holder") == employee) return p;
    }
    return std::nullopt;
  }

  ObjectId vacant_position(const json& j) const {
    const ObjectId pos_c = concept_by_name("Position");
    const ObjectId p = object_of(j, pos_c, "position");
    if (auto holder = ref_value(snap_.alive(p)->values, "holder"); holder && snap_.alive(*holder))
      throw Error(ErrorKind::NotVacant, "position " + std::to_string(p) + " is held by " + std::to_string(*holder),
                  {{"position", p}, {"holder", *holder}});
    return p;
  }

  ObjectId unit_of_position(ObjectId p) const { return ref_value(snap_.alive(p)->values, "unit").value_or(0); }

  void require_unit(ObjectId unit) const {
    if (unit && !session_.profile.sees_unit(unit)) deny(Decision::deny("out-of-scope unit"), {{"unit", unit}});
  }

  void require_employee_scope(ObjectId employee) const {
    if (auto unit = owner_of(snap_, employee).unit) require_unit(*unit);
  }

  void vacate(ObjectId employee) {
    if (auto old = held_position(employee))
      effects.push_back(SetEffect{*old, {{"holder", std::monostate{}}, {"assigned_at", std::monostate{}}}});
  }

  void assign(ObjectId employee, ObjectId position) {
    effects.push_back(SetEffect{position, {{"holder", Ref{employee}}, {"assigned_at", std::int64_t{state_}}}});
  }

  void hire(const json& p) {
    const ObjectId emp_c = concept_by_name("Employee");
    const auto& schema = snap_.schema_or_throw(emp_c);
    Problems problems;
    ValueMap values = decode(schema, p.value("values", json::object()), problems);
    problems.raise_if_any();
    std::optional<ObjectId> position;
    if (p.contains("position") && !p.at("position").is_null()) {
      position = vacant_position(p.at("position"));
      set_if_attr(schema, values, "dept", Ref{unit_of_position(*position)});
    }
    set_if_attr(schema, values, "status", std::string("active"));
    require(check_draft(session_, emp_c, values, snap_), {{"concept", "Employee"}});
    if (position) require_unit(unit_of_position(*position));
    check_mandatory(emp_c, values, problems);
    problems.raise_if_any();

    const ObjectId id = allocate();
    pending_[id] = emp_c;
    effects.push_back(CreateEffect{id, emp_c, values});
    if (position) assign(id, *position);
    if (p.contains("functions")) {
      const ObjectId link_c = concept_by_name("EmployeeFunction");
      const ObjectId wf_c = concept_by_name("WorkingFunction");
      for (const auto& f : p.at("functions")) {
        const ObjectId fid = object_of(f, wf_c, "functions");
        const ObjectId link = allocate();
        pending_[link] = link_c;
        effects.push_back(CreateEffect{link, link_c, {{"employee", Ref{id}}, {"function", Ref{fid}}}});
      }
    }
    fire("hire", emp_c, Subject::of_draft(emp_c, values), id);
  }

  void transfer(const json& p) {
    const ObjectId emp_c = concept_by_name("Employee");
    const ObjectId emp = object_of(p.at("employee"), emp_c, "employee");
    const ObjectId position = vacant_position(p.at("position"));
    require_employee_scope(emp);
    const ObjectId unit = unit_of_position(position);
    require_unit(unit);
    fire_first("transfer", emp_c, emp);
    vacate(emp);
    assign(emp, position);
    if (snap_.schema_or_throw(emp_c).attribute("dept")) effects.push_back(SetEffect{emp, {{"dept", Ref{unit}}}});
    flush_rule_effects();
  }

  void dismiss(const json& p) {
    const ObjectId emp_c = concept_by_name("Employee");
    const ObjectId emp = object_of(p.at("employee"), emp_c, "employee");
    require_employee_scope(emp);
    fire_first("dismiss", emp_c, emp);
    effects.push_back(SetEffect{emp, {{"status", std::string("dismissed")}}});
    vacate(emp);
    flush_rule_effects();
  }

  void re_enroll(const json& p) {
    const ObjectId emp_c = concept_by_name("Employee");
    const ObjectId emp = object_of(p.at("employee"), emp_c, "employee");
    require_employee_scope(emp);
    std::optional<ObjectId> position;
    if (p.contains("position") && !p.at("position").is_null()) {
      position = vacant_position(p.at("position"));
      require_unit(unit_of_position(*position));
    }
    fire_first("re_enroll", emp_c, emp);
    ValueMap values{{"status", std::string("active")}};
    if (position) {
      vacate(emp);
      assign(emp, *position);
      set_if_attr(snap_.schema_or_throw(emp_c), values, "dept", Ref{unit_of_position(*position)});
    }
    effects.push_back(SetEffect{emp, values});
    flush_rule_effects();
  }

  // Lifecycle events evaluate their rules before the primary effects are
  // built; rule output is still appended after them.
  void fire_first(const std::string& kind, ObjectId concept_id, ObjectId subject) {
    std::vector<Effect> saved;
    saved.swap(effects);
    fire(kind, concept_id, Subject::object(subject), subject);
    rule_effects_.swap(effects);
    effects.swap(saved);
  }

  void flush_rule_effects() {
    for (auto& e : rule_effects_) effects.push_back(std::move(e));
    rule_effects_.clear();
  }

  void leave_request(const json& p) {
    const ObjectId lr_c = concept_by_name("LeaveRequest");
    const ObjectId emp_c = concept_by_name("Employee");
    const auto& schema = snap_.schema_or_throw(lr_c);
    Problems problems;
    ValueMap values = decode(schema, p.value("values", json::object()), problems);
    problems.raise_if_any();
    ObjectId emp = session_.user;
    if (p.contains("employee") && !p.at("employee").is_null()) emp = p.at("employee").get<ObjectId>();
    if (emp == 0) throw Error(ErrorKind::Validation, "leave request needs an employee", {{"fields", {"employee"}}});
    object_of(json(emp), emp_c, "employee");
    values["employee"] = Ref{emp};
    if (schema.attribute("status") && !values.count("status")) values["status"] = std::string("requested");
    require(check_draft(session_, lr_c, values, snap_), {{"concept", "LeaveRequest"}});
    check_mandatory(lr_c, values, problems);
    problems.raise_if_any();
    const ObjectId id = allocate();
    pending_[id] = lr_c;
    effects.push_back(CreateEffect{id, lr_c, values});
    fire("leave_request", lr_c, Subject::of_draft(lr_c, values), id);
  }

  // ---- metadata events -----------------------------------------------------

  AttributeSpec parse_attribute(const json& j, const std::string& self_name, ObjectId self_id) const {
    auto invalid = [&](const std::string& msg) {
      return Error(ErrorKind::InvalidAttribute, msg, {{"attribute", j}});
    };
    if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) throw invalid("attribute needs a name");
    AttributeSpec a;
    a.name = j.at("name").get<std::string>();
    if (!is_identifier(a.name)) throw invalid("attribute name '" + a.name + "' is not an identifier");
    if (!j.contains("type") || !j.at("type").is_string()) throw invalid("attribute '" + a.name + "' needs a type");
    std::string type = j.at("type").get<std::string>();
    json target = j.value("target", json());
    if (type.rfind("reference(", 0) == 0 && type.back() == ')') {
      target = type.substr(10, type.size() - 11);
      type = "reference";
    }
    auto t = parse_type_name(type);
    if (!t) throw invalid("attribute '" + a.name + "' has unknown type '" + type + "'");
    a.type = *t;
    if (a.type == ValueType::Reference) {
      if (target.is_string() && target.get<std::string>() == self_name) {
        a.target = self_id;
      } else if (target.is_string() && snap_.lookup(target.get<std::string>()) &&
                 snap_.is_concept(*snap_.lookup(target.get<std::string>()))) {
        a.target = *snap_.lookup(target.get<std::string>());
      } else if (target.is_number_integer() && snap_.is_concept(target.get<ObjectId>())) {
        a.target = target.get<ObjectId>();
      } else {
        throw invalid("reference target " + target.dump() + " of '" + a.name + "' is not a defined concept");
      }
    }
    const auto& req = j.value("required", json(false));
    if (!req.is_boolean()) throw invalid("'required' of '" + a.name + "' must be a boolean");
    a.required = req.get<bool>();
    return a;
  }

  std::vector<AttributeSpec> parse_attributes(const json& list, const std::string& self_name, ObjectId self_id,
                                              std::vector<std::string> existing) const {
    if (list.is_null()) return {};
    if (!list.is_array()) throw Error(ErrorKind::InvalidAttribute, "'attributes' must be a list");
    std::vector<AttributeSpec> out;
    for (const auto& j : list) {
      AttributeSpec a = parse_attribute(j, self_name, self_id);
      if (std::find(existing.begin(), existing.end(), a.name) != existing.end())
        throw Error(ErrorKind::InvalidAttribute, "duplicate attribute '" + a.name + "'", {{"attribute", a.name}});
      existing.push_back(a.name);
      out.push_back(std::move(a));
    }
    return out;
  }

  void check_new_name(const std::string& name) const {
    if (!is_identifier(name)) throw Error(ErrorKind::Validation, "'" + name + "' is not a valid name", {{"name", name}});
    if (snap_.lookup(name))
      throw Error(ErrorKind::DuplicateName, "name '" + name + "' is already used by a concept or meta", {{"name", name}});
  }

  void define_concept(const json& p) {
    require_admin();
    const std::string name = p.at("name").get<std::string>();
    check_new_name(name);
    const ObjectId id = next_id_;
    auto attrs = parse_attributes(p.value("attributes", json::array()), name, id, {});
    allocate();
    effects.push_back(DefineConceptEffect{id, name, std::move(attrs), p.value("origin", "")});
  }

  void extend_concept(const json& p) {
    require_admin();
    const ObjectId c = data_concept(p.at("concept"));
    const auto& schema = snap_.schema_or_throw(c);
    std::vector<std::string> existing;
    for (const auto& a : schema.attributes) existing.push_back(a.name);
    auto attrs = parse_attributes(p.at("attributes"), schema.name, c, existing);
    for (const auto& a : attrs)
      if (a.required)
        throw Error(ErrorKind::InvalidAttribute, "attribute '" + a.name + "' added to an existing concept must be optional",
                    {{"attribute", a.name}});
    effects.push_back(ExtendConceptEffect{c, std::move(attrs)});
  }

  void comprehend(const json& p) {
    require_admin();
    const std::string name = p.at("name").get<std::string>();
    if (!is_identifier(name)) throw Error(ErrorKind::Validation, "'" + name + "' is not a valid name", {{"name", name}});
    const Formula formula = Formula::parse(p.at("formula").get<std::string>());
    const json& d = p.at("domain");
    const ObjectId domain = d.is_string() ? snap_.resolve_domain(d.get<std::string>()) : d.get<ObjectId>();
    if (!snap_.is_concept(domain) && !snap_.is_meta(domain))
      throw Error(ErrorKind::UnknownDomain, "unknown domain " + d.dump(), {{"domain", d}});
    std::optional<int> target;
    if (p.contains("level") && !p.at("level").is_null()) target = p.at("level").get<int>();
    const int level = check_comprehension(snap_, name, formula, domain, target, tower_);
    const ObjectId id = allocate();
    effects.push_back(DefineMetaEffect{id, name, level, domain, formula.print()});
    if (p.contains("description") && p.at("description").is_string())
      effects.push_back(SetEffect{id, {{"description", p.at("description").get<std::string>()}}});
  }

  void rule_register(const json& p) {
    require_admin();
    Rule rule = Rule::from_definition(p.contains("rule") ? p.at("rule") : p);
    validate_rule(rule);
    rule.id = allocate();
    effects.push_back(RegisterRuleEffect{std::move(rule)});
  }

  void validate_rule(const Rule& rule) const {
    if (std::find(kKinds.begin(), kKinds.end(), rule.trigger) == kKinds.end())
      throw Error(ErrorKind::Validation, "rule trigger '" + rule.trigger + "' is not an event kind",
                  {{"trigger", rule.trigger}});
    ObjectId subject = 0;
    if (!rule.subject_concept.empty()) {
      subject = snap_.resolve_domain(rule.subject_concept);
      if (!snap_.is_concept(subject))
        throw Error(ErrorKind::Validation, "rule subject must be a concept", {{"concept", rule.subject_concept}});
    }
    if (!rule.guard.empty()) {
      if (!subject) throw Error(ErrorKind::Validation, "a guarded rule must name its subject concept");
      typecheck(rule.guard, subject, snap_);
      const int level = level_of(rule.guard, snap_);
      if (level > tower_.max_level)
        throw Error(ErrorKind::TowerCapExceeded, "rule guard references level " + std::to_string(level),
                    {{"level", level}, {"max_level", tower_.max_level}});
    }
    for (const auto& a : rule.actions) {
      if (a.kind == RuleAction::Kind::SetAttr) {
        if (!subject) throw Error(ErrorKind::Validation, "a 'set' action needs the rule's subject concept");
        const std::string attr = a.path.rfind("self.", 0) == 0 ? a.path.substr(5) : a.path;
        const auto* spec = snap_.schema_or_throw(subject).attribute(attr);
        if (!spec || attr.find('.') != std::string::npos)
          throw Error(ErrorKind::Validation, "'set' path '" + a.path + "' is not an attribute of the subject",
                      {{"path", a.path}});
        try {
          value_from_json(a.value, *spec);
        } catch (const Error& e) {
          throw Error(ErrorKind::Validation, e.what(), {{"path", a.path}});
        }
      } else if (a.kind == RuleAction::Kind::CreateIndividual) {
        const ObjectId c = concept_by_name(a.concept_name);
        if (builtin::is_builtin_concept(c))
          throw Error(ErrorKind::Validation, "rule actions cannot create metadata objects", {{"concept", a.concept_name}});
        const auto& schema = snap_.schema_or_throw(c);
        for (const auto& [name, v] : a.values.items()) {
          const auto* spec = schema.attribute(name);
          if (!spec) throw Error(ErrorKind::Validation, "unknown attribute '" + name + "' of " + schema.name);
          if (v == "$self") {
            if (spec->type != ValueType::Reference || (subject && spec->target != subject))
              throw Error(ErrorKind::Validation, "'$self' does not fit attribute '" + name + "'");
            continue;
          }
          try {
            value_from_json(v, *spec);
          } catch (const Error& e) {
            throw Error(ErrorKind::Validation, e.what(), {{"attribute", name}});
          }
        }
        for (const auto& spec : schema.attributes)
          if (spec.required && !a.values.contains(spec.name))
            throw Error(ErrorKind::Validation, "'create' action omits required '" + spec.name + "'");
      }
    }
  }

  void add_override(const json& p) {
    require_admin();
    MandatoryOverride ov = MandatoryOverride::from_definition(p.contains("override") ? p.at("override") : p);
    const ObjectId c = concept_by_name(ov.concept_name);
    const auto& schema = snap_.schema_or_throw(c);
    for (const auto& a : ov.attributes)
      if (!schema.attribute(a))
        throw Error(ErrorKind::Validation, "override names unknown attribute '" + a + "' of " + schema.name,
                    {{"attribute", a}});
    for (const auto& s : ov.scenarios)
      if (!parse_scenario(s)) throw Error(ErrorKind::Validation, "unknown scenario '" + s + "'", {{"scenario", s}});
    if (!ov.condition.empty()) typecheck(ov.condition, c, snap_);
    ov.id = allocate();
    effects.push_back(AddOverrideEffect{std::move(ov)});
  }

  void pack_mark(const std::string& kind, const json& p) {
    require_admin();
    const std::string name = p.at("name").get<std::string>();
    const std::string version = p.at("version").get<std::string>();
    if (kind == "pack_begin") {
      const std::string msg = "pack " + name + " " + version + " begin";
      effects.push_back(AuditEffect{msg});
      audit.push_back(msg);
      return;
    }
    effects.push_back(MarkPackEffect{allocate(), name, version, p.value("digest", "")});
  }

  const Snapshot& snap_;
  ObjectId next_id_;
  StateIndex state_;
  const Session& session_;
  const TowerConfig& tower_;
  std::map<ObjectId, ObjectId> pending_;  // created in this event -> concept
  std::vector<Effect> rule_effects_;
};

}  // namespace

const std::vector<std::string>& event_kinds() { return kKinds; }

json Receipt::to_json() const { return {{"state", state}, {"created", created}, {"audit", audit}}; }

// ---------------------------------------------------------------------------

std::filesystem::path Engine::log_path(const std::filesystem::path& data_dir) { return data_dir / "log.ndjson"; }

std::filesystem::path Engine::checkpoint_path(const std::filesystem::path& data_dir) {
  return data_dir / "snapshots.ndjson";
}

void Engine::initialize(const std::filesystem::path& data_dir) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + data_dir.string() + ": " + ec.message());
  EventLog::create(log_path(data_dir));
}

Engine::Engine(EngineConfig config)
    : config_(std::move(config)), store_(config_.tower), sessions_(config_.session_ttl) {
  if (config_.tower.max_level < 2) throw Error(ErrorKind::Validation, "tower cap must be at least 2");
  if (config_.data_dir.empty()) return;
  const auto path = log_path(config_.data_dir);
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::Io, "no log in " + config_.data_dir.string() + " (run init first)",
                {{"path", path.string()}});
  log_ = EventLog::open(path);
  for (const auto& rec : log_.records()) fold(store_, rec);
  verify_checkpoints();
}

void Engine::fold(Store& store, const EventRecord& record) const {
  try {
    if (record.kind == "rollback_marker") {
      store.apply_marker(record.seq, record.payload.at("args").at("to").get<StateIndex>());
    } else {
      store.apply_json(record.seq, record.payload.at("effects"));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::CorruptLog, "malformed payload at seq " + std::to_string(record.seq) + ": " + ex.what(),
                {{"seq", record.seq}});
  }
}

void Engine::verify_checkpoints() {
  std::ifstream in(checkpoint_path(config_.data_dir));
  if (!in) return;
  std::optional<std::pair<StateIndex, std::string>> last;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto state = j.at("state").get<StateIndex>();
      if (state <= store_.head()) last = {state, j.at("content_hash").get<std::string>()};
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::CorruptLog, "malformed checkpoint line", {{"seq", 0}});
    }
  }
  if (!last) return;
  if (store_.content_hash(last->first) != last->second)
    throw Error(ErrorKind::CorruptLog, "checkpoint mismatch at seq " + std::to_string(last->first),
                {{"seq", last->first}});
  last_checkpoint_ = last->first;
}

void Engine::write_checkpoint_locked() {
  if (config_.data_dir.empty() || last_checkpoint_ == store_.head()) return;
  std::ofstream out(checkpoint_path(config_.data_dir), std::ios::app);
  out << json{{"state", store_.head()}, {"content_hash", store_.content_hash(store_.head())}}.dump() << '\n';
  if (!out.flush()) throw Error(ErrorKind::Io, "cannot write checkpoint");
  last_checkpoint_ = store_.head();
}

void Engine::checkpoint() {
  std::unique_lock lock(mutex_);
  write_checkpoint_locked();
}

std::shared_ptr<const Session> Engine::open_session(const Credentials& credentials) {
  Session s;
  {
    std::shared_lock lock(mutex_);
    const Snapshot snap = store_.at_head();
    s.opened_at = snap.state();
    s.login = credentials.login;
    if (credentials.login == config_.admin_login) {
      if (credentials.password != config_.admin_password) throw Error(ErrorKind::AuthFailed, "invalid credentials");
      s.user = 0;
      s.profile = administrator_profile(snap);
    } else {
      std::optional<ObjectId> user;
      if (auto cred_c = snap.lookup("Credential"); cred_c && snap.is_concept(*cred_c)) {
        const std::string secret = sha256_hex(credentials.password);
        for (ObjectId row : snap.extent(*cred_c)) {
          const auto& values = snap.alive(row)->values;
          auto login = values.find("login");
          auto hash = values.find("secret_sha256");
          if (login == values.end() || to_display(login->second) != credentials.login) continue;
          if (hash != values.end() && to_display(hash->second) == secret) user = ref_value(values, "employee");
          break;
        }
      }
      if (!user || !snap.alive(*user)) throw Error(ErrorKind::AuthFailed, "invalid credentials");
      s.user = *user;
      s.profile = derive_profile(snap, *user);
    }
  }
  return sessions_.add(std::move(s));
}

std::shared_ptr<const Session> Engine::admin_session() {
  return open_session(Credentials{config_.admin_login, config_.admin_password});
}

Receipt Engine::submit(const Session& session, const std::string& kind, const json& payload) {
  std::unique_lock lock(mutex_);
  if (session.closed) throw Error(ErrorKind::SessionClosed, "session is closed");
  const Snapshot snap = store_.at_head();
  const StateIndex state = store_.head() + 1;
  EventBuilder builder(snap, store_.next_id(), state, session, config_.tower);
  try {
    builder.run(kind, payload);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Validation, std::string("malformed payload: ") + ex.what(), {{"kind", kind}});
  }

  json effects = json::array();
  for (const auto& e : builder.effects) effects.push_back(effect_to_json(e));
  EventRecord rec;
  rec.ts = now_iso();
  rec.actor = session.user;
  rec.kind = kind;
  rec.payload = {{"args", payload}, {"effects", std::move(effects)}};
  log_.append(rec);
  store_.apply(state, builder.effects);
  if (config_.checkpoint_every > 0 && state % config_.checkpoint_every == 0) write_checkpoint_locked();
  return Receipt{state, std::move(builder.created), std::move(builder.audit)};
}

ObjectId Engine::register_rule(const Session& session, const json& definition) {
  const Receipt r = submit(session, "rule_register", {{"rule", definition}});
  return r.created.front();
}

StateIndex Engine::rollback(const Session& session, StateIndex to) {
  std::unique_lock lock(mutex_);
  if (session.closed) throw Error(ErrorKind::SessionClosed, "session is closed");
  if (!session.profile.metadata_admin)
    throw Error(ErrorKind::AccessDenied, "access denied: metadata_admin required", {{"reason", "metadata_admin required"}});
  if (to < 0 || to > store_.head())
    throw Error(ErrorKind::StateBeyondHead, "rollback target " + std::to_string(to) + " is outside 0.." +
                                                std::to_string(store_.head()),
                {{"state", to}, {"head", store_.head()}});
  EventRecord rec;
  rec.ts = now_iso();
  rec.actor = session.user;
  rec.kind = "rollback_marker";
  rec.payload = {{"args", {{"to", to}}}, {"effects", json::array()}};
  log_.append(rec);
  store_.apply_marker(rec.seq, to);
  return rec.seq;
}

StateIndex Engine::head() const {
  std::shared_lock lock(mutex_);
  return store_.head();
}

StoreSnapshot Engine::snapshot(std::optional<StateIndex> state) const {
  std::shared_lock lock(mutex_);
  const StateIndex s = state.value_or(store_.head());
  return StoreSnapshot{s, store_.content_hash(s)};
}

StoreSnapshot Engine::replay(StateIndex upto) const {
  std::vector<EventRecord> records;
  {
    std::shared_lock lock(mutex_);
    if (upto < 0 || upto > store_.head())
      throw Error(ErrorKind::StateBeyondHead, "replay target " + std::to_string(upto) + " is beyond head " +
                                                  std::to_string(store_.head()),
                  {{"state", upto}, {"head", store_.head()}});
    records.assign(log_.records().begin(), log_.records().begin() + upto);
  }
  Store fresh(config_.tower);
  for (const auto& rec : records) fold(fresh, rec);
  return StoreSnapshot{upto, fresh.content_hash(upto)};
}

std::vector<EventRecord> Engine::log(StateIndex from, StateIndex to) const {
  std::shared_lock lock(mutex_);
  const auto& records = log_.records();
  from = std::max<StateIndex>(from, 1);
  to = std::min<StateIndex>(to, static_cast<StateIndex>(records.size()));
  if (from > to) return {};
  return {records.begin() + (from - 1), records.begin() + to};
}

}  // namespace unistore
