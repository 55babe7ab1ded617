#include "unistore/rules.hpp"

#include "unistore/error.hpp"

namespace unistore {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }

std::string string_field(const nlohmann::json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) invalid(std::string("missing field '") + key + "'");
    return {};
  }
  if (!j.at(key).is_string()) invalid(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) invalid(std::string("field '") + key + "' must be a list");
  for (const auto& s : j.at(key)) {
    if (!s.is_string()) invalid(std::string("field '") + key + "' must list strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

nlohmann::json RuleAction::to_json() const {
  switch (kind) {
    case Kind::Reject: return {{"reject", message}};
    case Kind::Audit: return {{"audit", message}};
    case Kind::SetAttr: return {{"set", {{"path", path}, {"value", value}}}};
    case Kind::CreateIndividual: return {{"create", {{"concept", concept_name}, {"values", values}}}};
  }
  return nullptr;
}

RuleAction RuleAction::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 1) invalid("rule action must be an object with a single key");
  const auto first = j.begin();
  const std::string key = first.key();
  const nlohmann::json& body = first.value();
  RuleAction a;
  if (key == "reject" || key == "audit") {
    if (!body.is_string()) invalid("'" + key + "' action takes a message string");
    a.kind = key == "reject" ? Kind::Reject : Kind::Audit;
    a.message = body.get<std::string>();
  } else if (key == "set") {
    if (!body.is_object()) invalid("'set' action takes {path, value}");
    a.kind = Kind::SetAttr;
    a.path = string_field(body, "path", true);
    if (!body.contains("value")) invalid("'set' action needs a value");
    a.value = body.at("value");
    if (a.value.is_object() || a.value.is_array()) invalid("'set' value must be a literal");
  } else if (key == "create") {
    if (!body.is_object()) invalid("'create' action takes {concept, values}");
    a.kind = Kind::CreateIndividual;
    a.concept_name = string_field(body, "concept", true);
    a.values = body.value("values", nlohmann::json::object());
    if (!a.values.is_object()) invalid("'create' values must be an object");
  } else {
    invalid("rule actions may only reject, set, create or audit; got '" + key + "'");
  }
  return a;
}

nlohmann::json Rule::definition() const {
  nlohmann::json actions_json = nlohmann::json::array();
  for (const auto& a : actions) actions_json.push_back(a.to_json());
  nlohmann::json j = {{"trigger", trigger}, {"actions", actions_json}};
  if (!subject_concept.empty()) j["concept"] = subject_concept;
  if (!guard.empty()) j["guard"] = guard.print();
  if (!origin.empty()) j["origin"] = origin;
  return j;
}

Rule Rule::from_definition(const nlohmann::json& j) {
  if (!j.is_object()) invalid("rule must be an object");
  Rule r;
  r.trigger = string_field(j, "trigger", true);
  if (r.trigger.empty()) invalid("rule trigger is empty");
  r.subject_concept = string_field(j, "concept", false);
  const auto guard = string_field(j, "guard", false);
  if (!guard.empty()) r.guard = Formula::parse(guard);
  r.origin = string_field(j, "origin", false);
  if (!j.contains("actions") || !j.at("actions").is_array() || j.at("actions").empty())
    invalid("rule needs a non-empty action list");
  for (const auto& a : j.at("actions")) r.actions.push_back(RuleAction::from_json(a));
  return r;
}

nlohmann::json MandatoryOverride::definition() const {
  nlohmann::json j = {{"concept", concept_name}, {"attributes", attributes}};
  if (!condition.empty()) j["condition"] = condition.print();
  if (!scenarios.empty()) j["scenarios"] = scenarios;
  if (!origin.empty()) j["origin"] = origin;
  return j;
}

MandatoryOverride MandatoryOverride::from_definition(const nlohmann::json& j) {
  if (!j.is_object()) invalid("mandatory override must be an object");
  MandatoryOverride o;
  o.concept_name = string_field(j, "concept", true);
  const auto cond = string_field(j, "condition", false);
  if (!cond.empty()) o.condition = Formula::parse(cond);
  o.attributes = string_list(j, "attributes");
  if (o.attributes.empty()) invalid("mandatory override lists no attributes");
  o.scenarios = string_list(j, "scenarios");
  o.origin = string_field(j, "origin", false);
  return o;
}

}  // namespace unistore
