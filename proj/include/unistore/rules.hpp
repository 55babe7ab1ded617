#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/formula.hpp"
#include "unistore/types.hpp"

namespace unistore {

struct RuleAction {
  enum class Kind { Reject, SetAttr, CreateIndividual, Audit };

  Kind kind = Kind::Audit;
  std::string message;        // Reject, Audit
  std::string path;           // SetAttr, relative to the subject
  nlohmann::json value;       // SetAttr literal
  std::string concept_name;        // CreateIndividual
  nlohmann::json values;      // CreateIndividual; the string "$self" stands for the subject id

  nlohmann::json to_json() const;
  static RuleAction from_json(const nlohmann::json& j);
};

// Event-driven script: fires on events of `trigger` kind whose subject
// satisfies the guard. Actions never register rules or define schema.
struct Rule {
  ObjectId id = 0;
  std::string trigger;
  std::string subject_concept;  // optional filter; required to type-check a guard
  Formula guard;                // empty = always
  std::vector<RuleAction> actions;
  StateIndex registered_at = 0;
  std::string origin;

  // Definition without id/registered_at, the form used in manifests and requests.
  nlohmann::json definition() const;
  static Rule from_definition(const nlohmann::json& j);
};

// Extra required attributes for a concept when the condition holds against
// the draft being entered (stored as metadata objects).
struct MandatoryOverride {
  ObjectId id = 0;
  std::string concept_name;
  Formula condition;  // empty = always
  std::vector<std::string> attributes;
  std::vector<std::string> scenarios;  // empty = every scenario
  std::string origin;

  nlohmann::json definition() const;
  static MandatoryOverride from_definition(const nlohmann::json& j);
};

}  // namespace unistore
