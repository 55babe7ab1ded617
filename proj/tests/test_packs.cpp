#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "unistore/packs.hpp"
#include "unistore/seed.hpp"

using namespace unistore;
using namespace testkit;

namespace {

json manifest(json body, const std::string& name = "Probe") {
  body["name"] = name;
  body["version"] = "1.0.0";
  if (!body.contains("depends")) body["depends"] = {"Personal Data"};
  return body;
}

ErrorKind parse_error(const json& m) {
  return error_kind_of([&] { parse_pack(m, shipped_packs_dir() / "probe.json"); });
}

json malformed_details(const json& m) {
  try {
    parse_pack(m, shipped_packs_dir() / "probe.json");
  } catch (const Error& e) {
    return e.details();
  }
  return json();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

struct PackFixture {
  Engine engine;
  std::shared_ptr<const Session> admin = engine.admin_session();
  PackFixture() { install_shipped(engine, *admin, {"Personal Data"}); }
  MergePlan analyze(const ComponentPack& p) {
    return engine.read(std::nullopt, [&](const Snapshot& s) { return analyze_pack(p, s); });
  }
};

}  // namespace

TEST_CASE("the shipped manifests resolve by name") {
  CHECK(pack_file_stem("Leaves and Sick-Lists") == "leaves_and_sick_lists");
  CHECK(pack_file_stem("Appraisal and testing") == "appraisal_and_testing");
  for (const auto& name : all_pack_names()) {
    const ComponentPack p = load_pack(resolve_manifest(name));
    CHECK(p.name == name);
    CHECK_FALSE(p.version.empty());
    CHECK_FALSE(p.concepts.empty());
  }
}

TEST_CASE("malformed manifests are refused with a location") {
  const json concept_ok = {{"name", "Thing"}, {"attributes", {{{"name", "label"}, {"type", "text"}}}}};
  CHECK(parse_error(manifest({{"colour", "red"}})) == ErrorKind::MalformedPack);
  CHECK(malformed_details(manifest({{"colour", "red"}})).at("path") == "/colour");
  CHECK(parse_error({{"concepts", {concept_ok}}}) == ErrorKind::MalformedPack);
  CHECK(parse_error(manifest({{"concepts", {{{"name", "Thing"}, {"attributes", {{{"name", "x"}, {"type", "colour"}}}}}}}})) ==
        ErrorKind::MalformedPack);
  CHECK(parse_error(manifest({{"concepts", {concept_ok, concept_ok}}})) == ErrorKind::MalformedPack);
  CHECK(parse_error(manifest({{"concepts", {{{"name", "bad name"}, {"attributes", json::array()}}}}})) ==
        ErrorKind::MalformedPack);
  const json bad_formula = manifest({{"metas", {{{"name", "M"}, {"domain", "Employee"}, {"formula", "name = "}}}}});
  CHECK(parse_error(bad_formula) == ErrorKind::MalformedPack);
  CHECK(malformed_details(bad_formula).at("position") == 7);
  CHECK(parse_error(manifest({{"concepts", json::object()}})) == ErrorKind::MalformedPack);
}

TEST_CASE("references outside the pack and its dependencies dangle") {
  CHECK(parse_error(manifest({{"metas", {{{"name", "M"}, {"domain", "Spaceship"}, {"formula", "name = 'x'"}}}}})) ==
        ErrorKind::MalformedPack);
  CHECK(parse_error(manifest(
            {{"concepts", {{{"name", "Thing"}, {"attributes", {{{"name", "ship"}, {"type", "reference(Spaceship)"}}}}}}}})) ==
        ErrorKind::MalformedPack);
  CHECK(parse_error(manifest({{"metas", {{{"name", "M"}, {"domain", "Employee"}, {"formula", "x in Spaceship"}}}}})) ==
        ErrorKind::MalformedPack);
  // Without the dependency even Employee is out of scope.
  json no_dep = manifest({{"metas", {{{"name", "M"}, {"domain", "Employee"}, {"formula", "name = 'x'"}}}}});
  no_dep["depends"] = json::array();
  CHECK(parse_error(no_dep) == ErrorKind::MalformedPack);
}

TEST_CASE("dependencies must exist and must not cycle") {
  TempDir dir;
  write_file(dir.path / "alpha.json", R"({"name": "Alpha", "version": "1", "depends": ["Beta"]})");
  write_file(dir.path / "beta.json", R"({"name": "Beta", "version": "1", "depends": ["Alpha"]})");
  write_file(dir.path / "gamma.json", R"({"name": "Gamma", "version": "1", "depends": ["Nowhere"]})");
  write_file(dir.path / "broken.json", R"({"name": "Broken", )");
  CHECK(error_kind_of([&] { load_pack(dir.path / "alpha.json"); }) == ErrorKind::MalformedPack);
  CHECK(error_kind_of([&] { load_pack(dir.path / "gamma.json"); }) == ErrorKind::MalformedPack);
  CHECK(error_kind_of([&] { load_pack(dir.path / "broken.json"); }) == ErrorKind::MalformedPack);
  CHECK(error_kind_of([&] { load_pack(dir.path / "missing.json"); }) == ErrorKind::Io);
}

TEST_CASE("an empty manifest is a no-op") {
  PackFixture fx;
  TempDir dir;
  write_file(dir.path / "empty.json", "");
  const ComponentPack empty = load_pack(dir.path / "empty.json");
  CHECK(empty.empty());
  const MergePlan plan = fx.analyze(empty);
  CHECK(plan.is_noop());
  const StateIndex head = fx.engine.head();
  CHECK(apply_plan(fx.engine, *fx.admin, plan) == head);
  CHECK(fx.engine.head() == head);
}

TEST_CASE("packs extend existing concepts with optional attributes only") {
  PackFixture fx;
  SeedOptions o;
  o.employees = 5;
  seed_demo(fx.engine, *fx.admin, o);
  const ComponentPack pack = parse_pack(
      manifest({{"concepts",
                 {{{"name", "Employee"},
                   {"attributes",
                    {{{"name", "name"}, {"type", "text"}, {"required", true}},
                     {{"name", "badge"}, {"type", "integer"}, {"required", true}}}}}}}}),
      shipped_packs_dir() / "probe.json");
  const MergePlan plan = fx.analyze(pack);
  CHECK(plan.conflicts.empty());
  REQUIRE(plan.matches.size() == 1);
  REQUIRE(plan.matches[0].extensions.size() == 1);
  CHECK_FALSE(plan.matches[0].extensions[0].required);
  apply_plan(fx.engine, *fx.admin, plan);
  fx.engine.read(std::nullopt, [](const Snapshot& s) {
    const auto& schema = s.schema_or_throw(*s.lookup("Employee"));
    REQUIRE(schema.attribute("badge"));
    CHECK_FALSE(schema.attribute("badge")->required);
  });
  CHECK_NOTHROW(fx.engine.submit(*fx.admin, "hire", {{"values", {{"name", "N"}, {"hire_date", "2024-01-01"}}}}));
}

TEST_CASE("type mismatches block the merge") {
  PackFixture fx;
  const ComponentPack pack = parse_pack(
      manifest({{"concepts", {{{"name", "Employee"}, {"attributes", {{{"name", "hire_date"}, {"type", "integer"}}}}}}}}),
      shipped_packs_dir() / "probe.json");
  const MergePlan plan = fx.analyze(pack);
  REQUIRE(plan.conflicts.size() == 1);
  CHECK(plan.conflicts[0].kind == Conflict::Kind::TypeMismatch);
  CHECK(plan.conflicts[0].location == "Employee.hire_date");
  const StoreSnapshot before = fx.engine.snapshot();
  CHECK(error_kind_of([&] { apply_plan(fx.engine, *fx.admin, plan); }) == ErrorKind::ConflictsPresent);
  CHECK(fx.engine.snapshot() == before);
  CHECK(plan.to_json().at("conflicts").size() == 1);
}

TEST_CASE("a plan analysed against an older state is stale") {
  PackFixture fx;
  const MergePlan plan = fx.analyze(load_pack(resolve_manifest("Vacancies")));
  fx.engine.submit(*fx.admin, "create", {{"concept", "OrgUnit"}, {"values", {{"name", "X"}}}});
  CHECK(error_kind_of([&] { apply_plan(fx.engine, *fx.admin, plan); }) == ErrorKind::StaleStore);
}

TEST_CASE("a failing step rolls the whole pack back") {
  PackFixture fx;
  const StoreSnapshot before = fx.engine.snapshot();
  const ComponentPack pack = parse_pack(
      manifest({{"concepts", {{{"name", "Gadget"}, {"attributes", {{{"name", "label"}, {"type", "text"}}}}}}},
                {"seed", {{{"concept", "Employee"}, {"values", {{"name", "Z"}, {"hire_date", "2024-01-01"}, {"status", "dismissed"}}}}}}}),
      shipped_packs_dir() / "probe.json");
  CHECK(error_kind_of([&] { install_pack(fx.engine, *fx.admin, pack); }) == ErrorKind::RuleRejection);
  CHECK(fx.engine.snapshot().content_hash == before.content_hash);
  CHECK_FALSE(fx.engine.read(std::nullopt, [](const Snapshot& s) { return s.lookup("Gadget").has_value(); }));
}

TEST_CASE("packs need an administrator and their dependencies") {
  Engine engine;
  auto admin = engine.admin_session();
  CHECK(error_kind_of([&] { install_shipped(engine, *admin, {"Vacancies"}); }) == ErrorKind::Validation);
  install_shipped(engine, *admin, {"Personal Data"});
  SeedOptions o;
  o.employees = 40;
  const SeedSummary seed = seed_demo(engine, *admin, o);
  std::shared_ptr<const Session> user;
  for (std::size_t i = 1; i <= seed.employees.size() && !user; ++i) {
    auto s = engine.open_session({"u" + std::to_string(i), "u" + std::to_string(i)});
    if (!s->profile.metadata_admin) user = s;
  }
  REQUIRE(user);
  CHECK(error_kind_of([&] { install_shipped(engine, *user, {"Vacancies"}); }) == ErrorKind::AccessDenied);
}

TEST_CASE("re-applying a shipped pack changes nothing") {
  PackFixture fx;
  for (const auto& name : all_pack_names()) {
    const ComponentPack p = load_pack(resolve_manifest(name));
    install_pack(fx.engine, *fx.admin, p);
    const StoreSnapshot after = fx.engine.snapshot();
    const MergePlan again = fx.analyze(p);
    CHECK(again.is_noop());
    CHECK(install_pack(fx.engine, *fx.admin, p) == after.state);
    CHECK(fx.engine.snapshot() == after);
  }
}
