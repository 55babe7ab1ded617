#include "doctest.h"
#include "support.hpp"
#include "unistore/access.hpp"
#include "unistore/org.hpp"
#include "unistore/seed.hpp"

using namespace unistore;
using namespace testkit;

namespace {

struct Corp {
  Engine engine;
  std::shared_ptr<const Session> admin = engine.admin_session();
  SeedSummary seed;

  explicit Corp(int employees = 60) {
    install_shipped(engine, *admin, all_pack_names());
    SeedOptions o;
    o.employees = employees;
    seed = seed_demo(engine, *admin, o);
  }
  OrgModel org() const {
    return engine.read(std::nullopt, [](const Snapshot& s) { return OrgModel::from_snapshot(s); });
  }
  // Login of the n-th seeded employee.
  std::shared_ptr<const Session> login_as(ObjectId employee) {
    for (std::size_t i = 0; i < seed.employees.size(); ++i)
      if (seed.employees[i] == employee) {
        const std::string login = "u" + std::to_string(i + 1);
        return engine.open_session({login, login});
      }
    throw std::runtime_error("not a seeded employee");
  }
  // Holders of positions with the given title, in id order.
  std::vector<ObjectId> holders(const std::string& title) const {
    std::vector<ObjectId> out;
    for (const auto& [id, p] : org().positions)
      if (p.title == title && p.holder) out.push_back(*p.holder);
    return out;
  }
  ObjectId unit_of(ObjectId employee) const {
    const OrgModel o = org();
    return o.positions.at(*o.position_of(employee)).unit;
  }
  bool can(const Session& s, Action a, ObjectId id) {
    return engine.read(std::nullopt, [&](const Snapshot& snap) { return static_cast<bool>(check_access(s, a, id, snap)); });
  }
  ObjectId vacancy_in(ObjectId unit) const {
    for (const auto& [id, p] : org().positions)
      if (p.unit == unit && p.vacant()) return id;
    return 0;
  }
  ObjectId vacancy_outside(ObjectId unit) const {
    const OrgModel o = org();
    for (const auto& [id, p] : o.positions)
      if (!o.in_subtree(unit, p.unit) && p.vacant()) return id;
    return 0;
  }
};

}  // namespace

TEST_CASE("scenarios follow the position title") {
  Corp corp;
  CHECK(corp.login_as(corp.holders("President").at(0))->profile.scenario == Scenario::President);
  CHECK(corp.login_as(corp.holders("HR Director").at(0))->profile.scenario == Scenario::HrDirector);
  CHECK(corp.login_as(corp.holders("Division Head").at(0))->profile.scenario == Scenario::UnitManager);
  CHECK(corp.login_as(corp.holders("Department Head").at(0))->profile.scenario == Scenario::UnitManager);
  CHECK(corp.login_as(corp.holders("HR Officer").at(0))->profile.scenario == Scenario::HrOfficer);
  CHECK(corp.login_as(corp.holders("Specialist").at(0))->profile.scenario == Scenario::Employee);
  CHECK(corp.admin->profile.metadata_admin);
}

TEST_CASE("an employee sees only their own personal records") {
  Corp corp;
  const auto specialists = corp.holders("Specialist");
  const ObjectId me = specialists.at(0), other = specialists.at(1);
  auto s = corp.login_as(me);
  CHECK(corp.can(*s, Action::Read, me));
  CHECK_FALSE(corp.can(*s, Action::Read, other));
  CHECK_FALSE(corp.can(*s, Action::Write, me));
  CHECK(corp.engine.submit(*s, "leave_request",
                           {{"employee", me}, {"values", {{"kind", "annual"}, {"start", "2024-08-01"}, {"end", "2024-08-05"}}}})
            .created.size() == 1);
  CHECK(error_kind_of([&] {
          corp.engine.submit(*s, "leave_request",
                             {{"employee", other}, {"values", {{"kind", "annual"}, {"start", "2024-08-01"}, {"end", "2024-08-05"}}}});
        }) == ErrorKind::AccessDenied);
  CHECK(error_kind_of([&] { corp.engine.submit(*s, "set_attr", {{"id", me}, {"values", {{"email", "x@y"}}}}); }) ==
        ErrorKind::AccessDenied);
  CHECK(error_kind_of([&] { corp.engine.submit(*s, "define_concept", person_definition()); }) == ErrorKind::AccessDenied);
}

TEST_CASE("a department head reads and moves within their department only") {
  Corp corp;
  const ObjectId head = corp.holders("Department Head").at(0);
  const ObjectId dept = corp.unit_of(head);
  auto s = corp.login_as(head);
  const OrgModel org = corp.org();
  ObjectId inside = 0, outside = 0;
  for (ObjectId e : corp.holders("Specialist")) {
    if (org.in_subtree(dept, corp.unit_of(e))) {
      if (!inside) inside = e;
    } else if (!outside) {
      outside = e;
    }
  }
  REQUIRE(inside != 0);
  REQUIRE(outside != 0);
  CHECK(corp.can(*s, Action::Read, inside));
  CHECK_FALSE(corp.can(*s, Action::Read, outside));
  CHECK_FALSE(corp.can(*s, Action::Write, inside));
  CHECK(error_kind_of([&] { corp.engine.submit(*s, "dismiss", {{"employee", outside}}); }) == ErrorKind::AccessDenied);
  if (const ObjectId far = corp.vacancy_outside(dept))
    CHECK(error_kind_of([&] { corp.engine.submit(*s, "transfer", {{"employee", inside}, {"position", far}}); }) ==
          ErrorKind::AccessDenied);
  CHECK_NOTHROW(corp.engine.submit(*s, "dismiss", {{"employee", inside}}));
  CHECK(error_kind_of([&] {
          corp.engine.submit(*s, "create", {{"concept", "Education"}, {"values", {{"employee", inside}, {"institution", "x"}}}});
        }) == ErrorKind::AccessDenied);
}

TEST_CASE("the president reads and writes everywhere") {
  Corp corp;
  auto s = corp.login_as(corp.holders("President").at(0));
  for (ObjectId e : corp.holders("Specialist")) {
    CHECK(corp.can(*s, Action::Read, e));
    CHECK(corp.can(*s, Action::Write, e));
  }
  CHECK(corp.can(*s, Action::Read, builtin::kParamsObject));
}

TEST_CASE("an HR officer works on HR records in their subtree") {
  Corp corp;
  const ObjectId officer = corp.holders("HR Officer").at(0);
  auto s = corp.login_as(officer);
  const ObjectId unit = corp.unit_of(officer);
  const OrgModel org = corp.org();
  for (ObjectId e : corp.holders("Specialist")) {
    const bool mine = org.in_subtree(unit, corp.unit_of(e));
    CHECK(corp.can(*s, Action::Read, e) == mine);
    CHECK(corp.can(*s, Action::Write, e) == mine);
  }
  CHECK_FALSE(corp.can(*s, Action::Write, builtin::kParamsObject));
}

TEST_CASE("profiles are recomputed from the org structure") {
  Corp corp;
  const ObjectId specialist = corp.holders("Specialist").at(0);
  const ObjectId head = corp.holders("Department Head").at(0);
  corp.engine.submit(*corp.admin, "dismiss", {{"employee", head}});
  const OrgModel org = corp.org();
  ObjectId freed = 0;
  for (const auto& [id, p] : org.positions)
    if (p.title == "Department Head" && p.vacant()) freed = id;
  REQUIRE(freed != 0);
  corp.engine.submit(*corp.admin, "transfer", {{"employee", specialist}, {"position", freed}});
  CHECK(corp.login_as(specialist)->profile.scenario == Scenario::UnitManager);
  CHECK(error_kind_of([&] { corp.login_as(head); }) == ErrorKind::NoAssignment);
}

TEST_CASE("mandatory fields depend on the draft and the scenario") {
  Corp corp;
  const ObjectId emp = corp.engine.read(std::nullopt, [](const Snapshot& s) { return *s.lookup("Employee"); });
  auto fields = [&](const Session& s, json draft) {
    return corp.engine.read(std::nullopt, [&](const Snapshot& snap) {
      ValueMap values;
      const auto& schema = snap.schema_or_throw(emp);
      for (const auto& [k, v] : draft.items()) values[k] = value_from_json(v, *schema.attribute(k));
      return mandatory_fields(s, emp, snap, values);
    });
  };
  const std::set<std::string> base = fields(*corp.admin, json::object());
  CHECK(base.count("name"));
  CHECK(base.count("hire_date"));
  CHECK_FALSE(base.count("visa_no"));
  CHECK(fields(*corp.admin, {{"citizenship", "foreign"}}).count("visa_no"));
  CHECK_FALSE(fields(*corp.admin, {{"citizenship", "domestic"}}).count("visa_no"));
  CHECK(fields(*corp.login_as(corp.holders("Specialist").at(0)), json::object()) == base);
  // An override limited to one scenario only affects sessions of that scenario.
  corp.engine.submit(*corp.admin, "add_override",
                     {{"concept", "Employee"}, {"attributes", {"email"}}, {"scenarios", {"hr_officer"}}});
  CHECK(fields(*corp.login_as(corp.holders("HR Officer").at(0)), json::object()).count("email"));
  CHECK_FALSE(fields(*corp.engine.admin_session(), json::object()).count("email"));
  CHECK_FALSE(fields(*corp.login_as(corp.holders("Specialist").at(0)), json::object()).count("email"));
  // Entering a foreign employee without a visa number is refused.
  CHECK(error_kind_of([&] {
          corp.engine.submit(*corp.admin, "hire",
                             {{"values", {{"name", "New"}, {"hire_date", "2024-06-01"}, {"citizenship", "foreign"}}}});
        }) == ErrorKind::Validation);
  CHECK_NOTHROW(corp.engine.submit(
      *corp.admin, "hire",
      {{"values", {{"name", "New"}, {"hire_date", "2024-06-01"}, {"citizenship", "foreign"}, {"visa_no", "V1"}}}}));
}
