#include "unistore/packs.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "unistore/digest.hpp"
#include "unistore/error.hpp"
#include "unistore/formula.hpp"
#include "unistore/rules.hpp"

#ifndef UNISTORE_PACKS_DIR
#define UNISTORE_PACKS_DIR "packs"
#endif

namespace unistore {

namespace {

using nlohmann::json;

const std::set<std::string> kBuiltinConcepts = {"Concept", "MetaObject", "Rule", "MandatoryOverride",
                                                 "AppraisalParams", "Pack"};
const std::set<std::string> kManifestKeys = {"name",  "version",  "description", "depends", "concepts",
                                              "metas", "rules", "mandatory_overrides", "seed"};

[[noreturn]] void malformed(const std::string& path, const std::string& reason,
                            std::optional<std::size_t> position = std::nullopt) {
  json details = {{"path", path}, {"reason", reason}};
  if (position) details["position"] = *position;
  throw Error(ErrorKind::MalformedPack, "malformed pack at " + (path.empty() ? std::string("/") : path) + ": " + reason,
              std::move(details));
}

bool is_name(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

const json& array_field(const json& m, const char* key, const std::string& path) {
  static const json empty = json::array();
  if (!m.contains(key)) return empty;
  if (!m.at(key).is_array()) malformed(path + "/" + key, "must be a list");
  return m.at(key);
}

std::string string_field(const json& obj, const char* key, const std::string& path, bool required) {
  if (!obj.contains(key)) {
    if (required) malformed(path + "/" + key, "missing");
    return {};
  }
  if (!obj.at(key).is_string()) malformed(path + "/" + key, "must be a string");
  return obj.at(key).get<std::string>();
}

PackAttribute parse_attribute(const json& j, const std::string& path) {
  if (!j.is_object()) malformed(path, "attribute must be an object");
  PackAttribute a;
  a.name = string_field(j, "name", path, true);
  if (!is_name(a.name)) malformed(path + "/name", "'" + a.name + "' is not an identifier");
  std::string type = string_field(j, "type", path, true);
  if (type.rfind("reference(", 0) == 0 && type.back() == ')') {
    a.target = type.substr(10, type.size() - 11);
    type = "reference";
  } else if (type == "reference") {
    a.target = string_field(j, "target", path, true);
  }
  auto t = parse_type_name(type);
  if (!t) malformed(path + "/type", "unknown type '" + type + "'");
  a.type = *t;
  if (j.contains("required")) {
    if (!j.at("required").is_boolean()) malformed(path + "/required", "must be a boolean");
    a.required = j.at("required").get<bool>();
  }
  return a;
}

Formula parse_formula(const std::string& text, const std::string& path) {
  try {
    return Formula::parse(text);
  } catch (const ParseError& e) {
    malformed(path, std::string("formula: ") + e.what(), e.position());
  } catch (const Error& e) {
    malformed(path, std::string("formula: ") + e.what());
  }
}

// Everything a pack may refer to by name: its own definitions plus those of
// its dependencies (loaded transitively).
struct NameScope {
  std::map<std::string, std::vector<PackAttribute>> concepts;
  std::set<std::string> metas;

  bool has_domain(const std::string& n) const {
    return concepts.count(n) || metas.count(n) || kBuiltinConcepts.count(n);
  }
};

ComponentPack parse_impl(const json& m, const std::filesystem::path& source, std::vector<std::string>& loading,
                         NameScope& scope);

json read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot read manifest " + file.string(), {{"path", file.string()}});
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
    return json();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    malformed("", e.what(), e.byte);
  }
}

void load_dependency(const std::string& dep, const std::filesystem::path& source, std::vector<std::string>& loading,
                     NameScope& scope, const std::string& path) {
  if (std::find(loading.begin(), loading.end(), dep) != loading.end()) malformed(path, "cyclic dependency on '" + dep + "'");
  const std::string file = pack_file_stem(dep) + ".json";
  std::vector<std::filesystem::path> candidates;
  if (!source.empty()) candidates.push_back(source.parent_path() / file);
  candidates.push_back(shipped_packs_dir() / file);
  for (const auto& c : candidates) {
    if (!std::filesystem::exists(c)) continue;
    ComponentPack p = parse_impl(read_manifest(c), c, loading, scope);
    if (p.name != dep) malformed(path, "manifest " + c.string() + " declares '" + p.name + "', expected '" + dep + "'");
    return;
  }
  malformed(path, "dependency '" + dep + "' not found");
}

ComponentPack parse_impl(const json& m, const std::filesystem::path& source, std::vector<std::string>& loading,
                         NameScope& scope) {
  ComponentPack pack;
  pack.source = source;
  pack.digest = sha256_hex(m.dump());
  if (m.is_null()) return pack;
  if (!m.is_object()) malformed("", "manifest must be an object");
  for (const auto& [key, value] : m.items())
    if (!kManifestKeys.count(key)) malformed("/" + key, "unknown manifest field");

  pack.name = string_field(m, "name", "", false);
  pack.version = string_field(m, "version", "", false);
  if (pack.name.empty() && m.size() > 0 && (m.contains("concepts") || m.contains("metas") || m.contains("rules")))
    malformed("/name", "a non-empty pack needs a name");

  loading.push_back(pack.name);
  const auto& deps = array_field(m, "depends", "");
  for (std::size_t i = 0; i < deps.size(); ++i) {
    const std::string path = "/depends/" + std::to_string(i);
    if (!deps[i].is_string()) malformed(path, "must be a pack name");
    pack.depends.push_back(deps[i].get<std::string>());
    load_dependency(pack.depends.back(), source, loading, scope, path);
  }
  loading.pop_back();

  const auto& concepts = array_field(m, "concepts", "");
  std::set<std::string> own;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const std::string path = "/concepts/" + std::to_string(i);
    if (!concepts[i].is_object()) malformed(path, "concept must be an object");
    PackConcept c;
    c.name = string_field(concepts[i], "name", path, true);
    if (!is_name(c.name)) malformed(path + "/name", "'" + c.name + "' is not an identifier");
    if (!own.insert(c.name).second) malformed(path + "/name", "duplicate concept '" + c.name + "'");
    const auto& attrs = array_field(concepts[i], "attributes", path);
    std::set<std::string> names;
    for (std::size_t k = 0; k < attrs.size(); ++k) {
      const std::string apath = path + "/attributes/" + std::to_string(k);
      c.attributes.push_back(parse_attribute(attrs[k], apath));
      if (!names.insert(c.attributes.back().name).second)
        malformed(apath + "/name", "duplicate attribute '" + c.attributes.back().name + "'");
    }
    pack.concepts.push_back(std::move(c));
  }
  for (const auto& c : pack.concepts) scope.concepts[c.name] = c.attributes;

  for (std::size_t i = 0; i < pack.concepts.size(); ++i) {
    const auto& c = pack.concepts[i];
    for (std::size_t k = 0; k < c.attributes.size(); ++k) {
      const auto& a = c.attributes[k];
      if (a.type == ValueType::Reference && !scope.concepts.count(a.target))
        malformed("/concepts/" + std::to_string(i) + "/attributes/" + std::to_string(k) + "/type",
                  "dangling reference to '" + a.target + "'");
    }
  }

  auto check_domains = [&](const Formula& f, const std::string& path) {
    for (const auto& d : f.referenced_domains())
      if (!scope.has_domain(d)) malformed(path, "dangling reference to domain '" + d + "'");
  };

  const auto& metas = array_field(m, "metas", "");
  for (std::size_t i = 0; i < metas.size(); ++i) {
    const std::string path = "/metas/" + std::to_string(i);
    if (!metas[i].is_object()) malformed(path, "meta must be an object");
    PackMeta meta;
    meta.name = string_field(metas[i], "name", path, true);
    if (!is_name(meta.name)) malformed(path + "/name", "'" + meta.name + "' is not an identifier");
    meta.domain = string_field(metas[i], "domain", path, true);
    if (!scope.has_domain(meta.domain)) malformed(path + "/domain", "dangling reference to domain '" + meta.domain + "'");
    const Formula f = parse_formula(string_field(metas[i], "formula", path, true), path + "/formula");
    check_domains(f, path + "/formula");
    meta.formula = f.print();
    if (metas[i].contains("level") && !metas[i].at("level").is_null()) {
      if (!metas[i].at("level").is_number_integer()) malformed(path + "/level", "must be an integer");
      meta.level = metas[i].at("level").get<int>();
    }
    meta.description = string_field(metas[i], "description", path, false);
    scope.metas.insert(meta.name);
    pack.metas.push_back(std::move(meta));
  }

  const auto& rules = array_field(m, "rules", "");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string path = "/rules/" + std::to_string(i);
    Rule r;
    try {
      r = Rule::from_definition(rules[i]);
    } catch (const ParseError& e) {
      malformed(path + "/guard", e.what(), e.position());
    } catch (const Error& e) {
      malformed(path, e.what());
    }
    if (!r.subject_concept.empty() && !scope.concepts.count(r.subject_concept) &&
        !kBuiltinConcepts.count(r.subject_concept))
      malformed(path + "/concept", "dangling reference to '" + r.subject_concept + "'");
    if (!r.guard.empty()) check_domains(r.guard, path + "/guard");
    for (std::size_t k = 0; k < r.actions.size(); ++k) {
      const auto& a = r.actions[k];
      if (a.kind == RuleAction::Kind::CreateIndividual && !scope.concepts.count(a.concept_name))
        malformed(path + "/actions/" + std::to_string(k), "dangling reference to '" + a.concept_name + "'");
    }
    if (r.origin.empty()) r.origin = pack.name;
    pack.rules.push_back(r.definition());
  }

  const auto& overrides = array_field(m, "mandatory_overrides", "");
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const std::string path = "/mandatory_overrides/" + std::to_string(i);
    MandatoryOverride o;
    try {
      o = MandatoryOverride::from_definition(overrides[i]);
    } catch (const ParseError& e) {
      malformed(path + "/condition", e.what(), e.position());
    } catch (const Error& e) {
      malformed(path, e.what());
    }
    auto it = scope.concepts.find(o.concept_name);
    if (it == scope.concepts.end()) malformed(path + "/concept", "dangling reference to '" + o.concept_name + "'");
    for (const auto& a : o.attributes) {
      const bool known = std::any_of(it->second.begin(), it->second.end(), [&](const auto& x) { return x.name == a; });
      if (!known) malformed(path + "/attributes", "dangling reference to attribute '" + o.concept_name + "." + a + "'");
    }
    if (!o.condition.empty()) check_domains(o.condition, path + "/condition");
    if (o.origin.empty()) o.origin = pack.name;
    pack.mandatory_overrides.push_back(o.definition());
  }

  const auto& seed = array_field(m, "seed", "");
  for (std::size_t i = 0; i < seed.size(); ++i) {
    const std::string path = "/seed/" + std::to_string(i);
    if (!seed[i].is_object()) malformed(path, "seed row must be an object");
    SeedRow row;
    row.concept_name = string_field(seed[i], "concept", path, true);
    auto it = scope.concepts.find(row.concept_name);
    if (it == scope.concepts.end()) malformed(path + "/concept", "dangling reference to '" + row.concept_name + "'");
    row.values = seed[i].value("values", json::object());
    if (!row.values.is_object()) malformed(path + "/values", "must be an object");
    for (const auto& [k, v] : row.values.items()) {
      auto attr = std::find_if(it->second.begin(), it->second.end(), [&](const auto& x) { return x.name == k; });
      if (attr == it->second.end()) malformed(path + "/values/" + k, "unknown attribute of " + row.concept_name);
      if (v.is_object()) {
        if (attr->type != ValueType::Reference || !v.contains("$find") || !v.at("$find").is_string())
          malformed(path + "/values/" + k, "object values must be {\"$find\": formula} on references");
        check_domains(parse_formula(v.at("$find").get<std::string>(), path + "/values/" + k), path + "/values/" + k);
      }
    }
    pack.seed.push_back(std::move(row));
  }
  return pack;
}

std::string describe_attr(const Snapshot& snap, const AttributeSpec& a) {
  if (a.type == ValueType::Reference) return "reference(" + snap.name_of(a.target) + ")";
  return std::string(type_name(a.type));
}

}  // namespace

// ---------------------------------------------------------------------------

std::string PackAttribute::type_text() const {
  if (type == ValueType::Reference) return "reference(" + target + ")";
  return std::string(type_name(type));
}

json PackAttribute::to_json() const { return {{"name", name}, {"type", type_text()}, {"required", required}}; }

json PackConcept::to_json() const {
  json attrs = json::array();
  for (const auto& a : attributes) attrs.push_back(a.to_json());
  return {{"name", name}, {"attributes", attrs}};
}

json PackMeta::to_json() const {
  json j = {{"name", name}, {"domain", domain}, {"formula", formula}};
  j["level"] = level ? json(*level) : json();
  if (!description.empty()) j["description"] = description;
  return j;
}

bool ComponentPack::empty() const {
  return concepts.empty() && metas.empty() && rules.empty() && mandatory_overrides.empty() && seed.empty();
}

std::string pack_file_stem(std::string_view pack_name) {
  std::string out;
  bool gap = false;
  for (char c : pack_name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (gap && !out.empty()) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      gap = false;
    } else {
      gap = true;
    }
  }
  return out;
}

std::filesystem::path shipped_packs_dir() {
  if (const char* env = std::getenv("UNISTORE_PACKS_DIR"); env && *env) return env;
  return UNISTORE_PACKS_DIR;
}

std::filesystem::path resolve_manifest(const std::string& arg) {
  namespace fs = std::filesystem;
  const std::vector<fs::path> candidates = {arg, arg + ".json", shipped_packs_dir() / arg,
                                            shipped_packs_dir() / (arg + ".json"),
                                            shipped_packs_dir() / (pack_file_stem(arg) + ".json")};
  for (const auto& c : candidates)
    if (fs::is_regular_file(c)) return c;
  throw Error(ErrorKind::Io, "manifest '" + arg + "' not found", {{"manifest", arg}});
}

ComponentPack parse_pack(const json& manifest, const std::filesystem::path& source) {
  std::vector<std::string> loading;
  NameScope scope;
  return parse_impl(manifest, source, loading, scope);
}

ComponentPack load_pack(const std::filesystem::path& manifest) { return parse_pack(read_manifest(manifest), manifest); }

// ---------------------------------------------------------------------------
// Analysis

std::string_view conflict_kind_name(Conflict::Kind kind) {
  switch (kind) {
    case Conflict::Kind::TypeMismatch: return "TypeMismatch";
    case Conflict::Kind::StratificationBreak: return "StratificationBreak";
    case Conflict::Kind::ConstraintContradiction: return "ConstraintContradiction";
    case Conflict::Kind::NameCollisionDifferentKind: return "NameCollisionDifferentKind";
  }
  return "TypeMismatch";
}

json Conflict::to_json() const {
  return {{"kind", conflict_kind_name(kind)}, {"location", location}, {"detail", detail}};
}

bool MergePlan::is_noop() const {
  return concept_steps.empty() && meta_additions.empty() && rule_additions.empty() && override_additions.empty() &&
         seed.empty();
}

json MergePlan::to_json() const {
  json j = {{"pack", pack}, {"version", version}, {"digest", digest}, {"analyzed_at", analyzed_at}, {"noop", is_noop()}};
  j["additions"] = json::array();
  for (const auto& c : additions) j["additions"].push_back(c.to_json());
  j["matches"] = json::array();
  for (const auto& m : matches) {
    json ext = json::array();
    for (const auto& a : m.extensions) ext.push_back(a.to_json());
    j["matches"].push_back({{"concept", m.concept_name}, {"store_id", m.store_id}, {"extensions", ext}});
  }
  j["metas"] = json::array();
  for (const auto& m : meta_additions) j["metas"].push_back(m.to_json());
  j["rules"] = rule_additions;
  j["mandatory_overrides"] = override_additions;
  j["seed"] = json::array();
  for (const auto& r : seed) j["seed"].push_back({{"concept", r.concept_name}, {"values", r.values}});
  j["conflicts"] = json::array();
  for (const auto& c : conflicts) j["conflicts"].push_back(c.to_json());
  j["ordering"] = ordering;
  return j;
}

MergePlan analyze_pack(const ComponentPack& pack, const Snapshot& snap, const TowerConfig& tower) {
  MergePlan plan;
  plan.pack = pack.name;
  plan.version = pack.version;
  plan.digest = pack.digest;
  plan.analyzed_at = snap.state();

  auto conflict = [&](Conflict::Kind kind, std::string location, std::string detail) {
    plan.conflicts.push_back(Conflict{kind, std::move(location), std::move(detail)});
  };
  auto store_concept = [&](const std::string& name) -> std::optional<ObjectId> {
    auto id = snap.lookup(name);
    if (id && snap.is_concept(*id)) return id;
    return std::nullopt;
  };

  // Concepts: additions, matches and their extensions.
  std::map<std::string, std::vector<PackAttribute>> new_attrs;  // merged-in attributes per concept
  std::vector<ConceptStep> steps;
  for (const auto& c : pack.concepts) {
    auto id = snap.lookup(c.name);
    if (!id) {
      plan.additions.push_back(c);
      steps.push_back(ConceptStep{false, c.name, c.attributes});
      new_attrs[c.name] = c.attributes;
      continue;
    }
    if (snap.is_meta(*id)) {
      conflict(Conflict::Kind::NameCollisionDifferentKind, "concepts/" + c.name, "the store defines a meta-object of that name");
      continue;
    }
    if (builtin::is_builtin_concept(*id)) {
      conflict(Conflict::Kind::NameCollisionDifferentKind, "concepts/" + c.name, "the name belongs to a built-in metadata concept");
      continue;
    }
    const auto& schema = snap.schema_or_throw(*id);
    ConceptMatch match{c.name, *id, {}};
    for (const auto& a : c.attributes) {
      const auto* existing = schema.attribute(a.name);
      if (!existing) {
        PackAttribute ext = a;
        ext.required = false;
        match.extensions.push_back(ext);
        continue;
      }
      const bool same = existing->type == a.type &&
                        (a.type != ValueType::Reference || snap.name_of(existing->target) == a.target);
      if (!same)
        conflict(Conflict::Kind::TypeMismatch, c.name + "." + a.name,
                 "pack declares " + a.type_text() + ", store has " + describe_attr(snap, *existing));
    }
    if (!match.extensions.empty()) {
      steps.push_back(ConceptStep{true, c.name, match.extensions});
      new_attrs[c.name] = match.extensions;
    }
    plan.matches.push_back(std::move(match));
  }

  auto known_concept = [&](const std::string& name) {
    return store_concept(name).has_value() ||
           std::any_of(plan.additions.begin(), plan.additions.end(), [&](const auto& c) { return c.name == name; });
  };
  for (const auto& step : steps)
    for (const auto& a : step.attributes)
      if (a.type == ValueType::Reference && !known_concept(a.target))
        throw Error(ErrorKind::Validation,
                    "pack '" + pack.name + "' needs concept '" + a.target + "'; apply its dependencies first",
                    {{"missing", a.target}, {"depends", pack.depends}});

  // Org-structure proximity: OrgUnit and every concept that reaches it
  // through references (pack or store schema) go first.
  std::map<std::string, std::set<std::string>> refs;
  for (ObjectId c : snap.all_concepts()) {
    const auto* schema = snap.schema(c);
    for (const auto& a : schema->attributes)
      if (a.type == ValueType::Reference) refs[schema->name].insert(snap.name_of(a.target));
  }
  for (const auto& step : steps)
    for (const auto& a : step.attributes)
      if (a.type == ValueType::Reference) refs[step.concept_name].insert(a.target);
  std::set<std::string> linked = {"OrgUnit"};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [name, targets] : refs) {
      if (linked.count(name)) continue;
      for (const auto& t : targets)
        if (linked.count(t)) {
          linked.insert(name);
          grew = true;
          break;
        }
    }
  }

  // Topological order: a step runs after the additions it references.
  std::vector<bool> done(steps.size(), false);
  auto ready = [&](std::size_t i) {
    for (const auto& a : steps[i].attributes) {
      if (a.type != ValueType::Reference || a.target == steps[i].concept_name) continue;
      for (std::size_t k = 0; k < steps.size(); ++k)
        if (!done[k] && !steps[k].extension && steps[k].concept_name == a.target) return false;
    }
    return true;
  };
  for (std::size_t n = 0; n < steps.size(); ++n) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (done[i] || !ready(i)) continue;
      if (!pick || (linked.count(steps[i].concept_name) && !linked.count(steps[*pick].concept_name))) pick = i;
    }
    if (!pick) {
      for (std::size_t i = 0; i < steps.size(); ++i)
        if (!done[i])
          conflict(Conflict::Kind::ConstraintContradiction, "concepts/" + steps[i].concept_name,
                   "cyclic references among new concepts");
      break;
    }
    done[*pick] = true;
    plan.concept_steps.push_back(steps[*pick]);
    plan.ordering.push_back((steps[*pick].extension ? "extend_concept " : "define_concept ") + steps[*pick].concept_name);
  }

  // Metas: levels against the merged schema.
  std::map<std::string, int> pack_meta_levels;
  auto domain_level = [&](const std::string& name) -> std::optional<int> {
    if (pack_meta_levels.count(name)) return pack_meta_levels.at(name);
    if (new_attrs.count(name) && !store_concept(name)) return 1;
    if (auto id = snap.lookup(name)) return snap.level(*id);
    return std::nullopt;
  };
  auto member_level = [&](const std::string& name) -> std::optional<int> {
    if (pack_meta_levels.count(name)) return pack_meta_levels.at(name) - 1;
    if (new_attrs.count(name) && !store_concept(name)) return 0;
    if (auto id = snap.lookup(name)) return snap.member_level(*id);
    return std::nullopt;
  };
  for (const auto& m : pack.metas) {
    const std::string loc = "metas/" + m.name;
    if (auto id = snap.lookup(m.name)) {
      if (snap.is_concept(*id)) {
        conflict(Conflict::Kind::NameCollisionDifferentKind, loc, "the store defines a concept of that name");
      } else if (const auto* existing = snap.meta(*id)) {
        const bool same = snap.name_of(existing->domain) == m.domain && existing->formula.print() == m.formula &&
                          (!m.level || *m.level == existing->level);
        if (!same)
          conflict(Conflict::Kind::ConstraintContradiction, loc,
                   "the store defines '" + m.name + "' over " + snap.name_of(existing->domain) + " as '" +
                       existing->formula.print() + "'");
      }
      continue;
    }
    if (std::any_of(pack.concepts.begin(), pack.concepts.end(), [&](const auto& c) { return c.name == m.name; })) {
      conflict(Conflict::Kind::NameCollisionDifferentKind, loc, "the pack defines a concept of that name");
      continue;
    }
    const auto members = member_level(m.domain);
    if (!members)
      throw Error(ErrorKind::Validation, "pack '" + pack.name + "' needs domain '" + m.domain + "'; apply its dependencies first",
                  {{"missing", m.domain}});
    int level = *members + 1;
    if (m.domain == "MetaObject") {
      level = m.level.value_or(2);
      if (level < 2) {
        conflict(Conflict::Kind::StratificationBreak, loc, "comprehension over MetaObject needs level >= 2");
        continue;
      }
    } else if (m.level && *m.level != level) {
      conflict(Conflict::Kind::StratificationBreak, loc,
               "declared level " + std::to_string(*m.level) + " but the domain yields level " + std::to_string(level));
      continue;
    }
    if (level > tower.max_level) {
      conflict(Conflict::Kind::StratificationBreak, loc,
               "level " + std::to_string(level) + " exceeds the tower cap " + std::to_string(tower.max_level));
      continue;
    }
    bool ok = true;
    const Formula parsed = Formula::parse(m.formula);
    for (const auto& d : parsed.referenced_domains()) {
      const auto dl = domain_level(d);
      if (!dl) {
        throw Error(ErrorKind::Validation, "pack '" + pack.name + "' needs domain '" + d + "'", {{"missing", d}});
      }
      if (*dl >= level) {
        conflict(Conflict::Kind::StratificationBreak, loc,
                 "formula references '" + d + "' of level " + std::to_string(*dl) + " from a level-" +
                     std::to_string(level) + " meta");
        ok = false;
      }
    }
    if (!ok) continue;
    pack_meta_levels[m.name] = level;
    plan.meta_additions.push_back(m);
    plan.ordering.push_back("comprehend " + m.name);
  }

  // Rules and overrides: identical definitions already present are skipped.
  std::set<std::string> rules_present;
  for (const Rule* r : snap.rules()) rules_present.insert(r->definition().dump());
  for (const auto& def : pack.rules) {
    if (rules_present.count(def.dump())) continue;
    plan.rule_additions.push_back(def);
    plan.ordering.push_back("rule_register " + def.at("trigger").get<std::string>());
  }
  std::set<std::string> overrides_present;
  for (const MandatoryOverride* o : snap.overrides()) overrides_present.insert(o->definition().dump());
  for (std::size_t i = 0; i < pack.mandatory_overrides.size(); ++i) {
    const auto& def = pack.mandatory_overrides[i];
    if (overrides_present.count(def.dump())) continue;
    const std::string concept_name = def.at("concept").get<std::string>();
    std::set<std::string> attrs;
    if (auto id = store_concept(concept_name))
      for (const auto& a : snap.schema(*id)->attributes) attrs.insert(a.name);
    if (new_attrs.count(concept_name))
      for (const auto& a : new_attrs.at(concept_name)) attrs.insert(a.name);
    bool ok = true;
    for (const auto& a : def.at("attributes")) {
      if (!attrs.count(a.get<std::string>())) {
        conflict(Conflict::Kind::ConstraintContradiction, "mandatory_overrides/" + std::to_string(i),
                 "override requires '" + concept_name + "." + a.get<std::string>() + "', absent from the merged schema");
        ok = false;
      }
    }
    if (!ok) continue;
    plan.override_additions.push_back(def);
    plan.ordering.push_back("add_override " + concept_name);
  }

  // Seed rows once per (name, version, digest).
  bool applied = false;
  for (ObjectId p : snap.extent(builtin::kPack)) {
    const auto& v = snap.alive(p)->values;
    auto text = [&](const char* k) {
      auto it = v.find(k);
      return it == v.end() ? std::string() : to_display(it->second);
    };
    if (text("name") == pack.name && text("version") == pack.version && text("digest") == pack.digest) applied = true;
  }
  if (!applied && !pack.seed.empty()) {
    plan.seed = pack.seed;
    plan.ordering.push_back("seed " + std::to_string(pack.seed.size()) + " rows");
  }
  return plan;
}

StateIndex apply_plan(Engine& engine, const Session& session, const MergePlan& plan) {
  if (session.closed) throw Error(ErrorKind::SessionClosed, "session is closed");
  if (!session.profile.metadata_admin)
    throw Error(ErrorKind::AccessDenied, "access denied: metadata_admin required", {{"reason", "metadata_admin required"}});
  if (!plan.conflicts.empty()) {
    json list = json::array();
    for (const auto& c : plan.conflicts) list.push_back(c.to_json());
    throw Error(ErrorKind::ConflictsPresent, std::to_string(plan.conflicts.size()) + " conflicts block the plan",
                {{"conflicts", list}});
  }
  const StateIndex start = engine.head();
  if (start != plan.analyzed_at)
    throw Error(ErrorKind::StaleStore,
                "store moved from state " + std::to_string(plan.analyzed_at) + " to " + std::to_string(start) +
                    " since analysis",
                {{"analyzed_at", plan.analyzed_at}, {"head", start}});
  if (plan.is_noop()) return start;

  const json marker = {{"name", plan.pack}, {"version", plan.version}, {"digest", plan.digest}};
  try {
    engine.submit(session, "pack_begin", marker);
    for (const auto& step : plan.concept_steps) {
      json attrs = json::array();
      for (const auto& a : step.attributes) attrs.push_back(a.to_json());
      if (step.extension) {
        engine.submit(session, "extend_concept", {{"concept", step.concept_name}, {"attributes", attrs}});
      } else {
        engine.submit(session, "define_concept", {{"name", step.concept_name}, {"attributes", attrs}, {"origin", plan.pack}});
      }
    }
    for (const auto& m : plan.meta_additions) {
      json p = {{"name", m.name}, {"domain", m.domain}, {"formula", m.formula}};
      if (m.level) p["level"] = *m.level;
      if (!m.description.empty()) p["description"] = m.description;
      engine.submit(session, "comprehend", p);
    }
    for (const auto& r : plan.rule_additions) engine.submit(session, "rule_register", {{"rule", r}});
    for (const auto& o : plan.override_additions) engine.submit(session, "add_override", {{"override", o}});
    for (const auto& row : plan.seed) {
      json values = json::object();
      for (const auto& [k, v] : row.values.items()) {
        if (!v.is_object()) {
          values[k] = v;
          continue;
        }
        values[k] = engine.read(std::nullopt, [&](const Snapshot& snap) {
          const auto& schema = snap.schema_or_throw(*snap.lookup(row.concept_name));
          return snap.individuate(Formula::parse(v.at("$find").get<std::string>()), schema.attribute(k)->target);
        });
      }
      engine.submit(session, "create", {{"concept", row.concept_name}, {"values", values}});
    }
    engine.submit(session, "pack_end", marker);
  } catch (...) {
    if (engine.head() != start) engine.rollback(session, start);
    throw;
  }
  return engine.head();
}

StateIndex install_pack(Engine& engine, const Session& session, const ComponentPack& pack) {
  const MergePlan plan = engine.read(std::nullopt, [&](const Snapshot& snap) {
    return analyze_pack(pack, snap, engine.config().tower);
  });
  return apply_plan(engine, session, plan);
}

}  // namespace unistore
