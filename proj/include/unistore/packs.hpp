#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/engine.hpp"
#include "unistore/store.hpp"

namespace unistore {

struct PackAttribute {
  std::string name;
  ValueType type = ValueType::Text;
  std::string target;  // concept name for references
  bool required = false;

  std::string type_text() const;  // "text", "reference(OrgUnit)", ...
  nlohmann::json to_json() const;
};

struct PackConcept {
  std::string name;
  std::vector<PackAttribute> attributes;

  nlohmann::json to_json() const;
};

struct PackMeta {
  std::string name;
  std::string domain;
  std::string formula;  // canonical printed form
  std::optional<int> level;
  std::string description;

  nlohmann::json to_json() const;
};

struct SeedRow {
  std::string concept_name;
  nlohmann::json values;  // reference values may be {"$find": "<formula>"}
};

struct ComponentPack {
  std::string name;
  std::string version;
  std::vector<std::string> depends;
  std::vector<PackConcept> concepts;
  std::vector<PackMeta> metas;
  std::vector<nlohmann::json> rules;                // rule definitions
  std::vector<nlohmann::json> mandatory_overrides;  // override definitions
  std::vector<SeedRow> seed;
  std::string digest;  // SHA-256 of the canonical manifest
  std::filesystem::path source;

  bool empty() const;
};

// Parses and validates a manifest. Dependencies are looked up as sibling
// files named after the pack in snake_case, then in the shipped pack
// directory. Throws MalformedPack with {path, position?, reason}.
ComponentPack load_pack(const std::filesystem::path& manifest);
ComponentPack parse_pack(const nlohmann::json& manifest, const std::filesystem::path& source = {});

// "Leaves and Sick-Lists" -> "leaves_and_sick_lists".
std::string pack_file_stem(std::string_view pack_name);
// Directory of the shipped manifests (build-time default, overridable by
// the UNISTORE_PACKS_DIR environment variable).
std::filesystem::path shipped_packs_dir();
// Resolves a manifest argument: an existing path, the path plus ".json",
// or a shipped pack name.
std::filesystem::path resolve_manifest(const std::string& name_or_path);

struct Conflict {
  enum class Kind { TypeMismatch, StratificationBreak, ConstraintContradiction, NameCollisionDifferentKind };

  Kind kind = Kind::TypeMismatch;
  std::string location;
  std::string detail;

  nlohmann::json to_json() const;
};

std::string_view conflict_kind_name(Conflict::Kind kind);

struct ConceptMatch {
  std::string concept_name;
  ObjectId store_id = 0;
  std::vector<PackAttribute> extensions;  // applied as optional attributes
};

// One schema step of a plan: a new concept or new attributes on a stored one.
struct ConceptStep {
  bool extension = false;
  std::string concept_name;
  std::vector<PackAttribute> attributes;
};

struct MergePlan {
  std::string pack;
  std::string version;
  std::string digest;
  StateIndex analyzed_at = 0;
  std::vector<PackConcept> additions;  // in application order
  std::vector<ConceptMatch> matches;
  std::vector<PackMeta> meta_additions;
  std::vector<nlohmann::json> rule_additions;
  std::vector<nlohmann::json> override_additions;
  std::vector<SeedRow> seed;
  std::vector<Conflict> conflicts;
  std::vector<ConceptStep> concept_steps;  // org-linked concepts first
  std::vector<std::string> ordering;       // every step, human-readable

  // True when applying would change nothing.
  bool is_noop() const;
  nlohmann::json to_json() const;
};

// Read-only. Throws Validation when the pack needs concepts neither it nor
// the store defines (missing dependencies).
MergePlan analyze_pack(const ComponentPack& pack, const Snapshot& snap, const TowerConfig& tower = {});

// Applies a conflict-free plan through the engine, one event per item
// between pack_begin/pack_end markers; a failure part-way rolls back to the
// pre-apply state. Returns the new head. Throws AccessDenied,
// ConflictsPresent, StaleStore.
StateIndex apply_plan(Engine& engine, const Session& session, const MergePlan& plan);

// analyze + apply against the engine head.
StateIndex install_pack(Engine& engine, const Session& session, const ComponentPack& pack);

}  // namespace unistore
