#include "doctest.h"
#include "support.hpp"
#include "unistore/appraisal.hpp"
#include "unistore/org.hpp"
#include "unistore/seed.hpp"

using namespace unistore;
using namespace testkit;

namespace {

struct Seeded {
  Engine engine;
  std::shared_ptr<const Session> admin = engine.admin_session();
  SeedSummary summary;

  explicit Seeded(SeedOptions o) {
    install_shipped(engine, *admin, {"Personal Data"});
    summary = seed_demo(engine, *admin, o);
  }
  OrgModel org() const {
    return engine.read(std::nullopt, [](const Snapshot& s) { return OrgModel::from_snapshot(s); });
  }
};

SeedOptions opts(int employees, bool perfect = false, std::uint32_t seed = 20240601) {
  SeedOptions o;
  o.employees = employees;
  o.perfect = perfect;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("the demo corporation has the documented shape") {
  Seeded s(opts(100));
  const OrgModel org = s.org();
  CHECK(s.summary.units.size() == 21);
  CHECK(org.units.size() == 21);
  CHECK(org.units.at(*org.root).children.size() == 4);
  for (ObjectId division : org.units.at(*org.root).children) CHECK(org.units.at(division).children.size() == 4);
  CHECK(s.summary.employees.size() == 100);
  CHECK(s.summary.positions.size() == 110);
  int vacant = 0;
  for (const auto& [id, p] : org.positions) vacant += p.vacant();
  CHECK(vacant == 10);
  for (const auto& [id, p] : org.positions)
    if (!p.vacant()) CHECK(std::binary_search(org.employees.begin(), org.employees.end(), *p.holder));
}

TEST_CASE("seeding is deterministic in its seed") {
  Seeded a(opts(50)), b(opts(50)), c(opts(50, false, 7));
  CHECK(a.engine.snapshot() == b.engine.snapshot());
  CHECK(a.engine.snapshot().content_hash != c.engine.snapshot().content_hash);
  CHECK(a.summary.to_json() == b.summary.to_json());
}

TEST_CASE("zero employees leaves every position vacant") {
  Seeded s(opts(0));
  const OrgModel org = s.org();
  CHECK(org.employees.empty());
  CHECK(s.summary.units.size() == 21);
  for (const auto& [id, p] : org.positions) CHECK(p.vacant());
  CHECK(error_kind_of([&] { s.engine.open_session({"u1", "u1"}); }) == ErrorKind::AuthFailed);
}

TEST_CASE("the perfect corporation appraises to one everywhere") {
  Seeded s(opts(80, true));
  const OrgModel org = s.org();
  for (const auto& [id, p] : org.positions) CHECK_FALSE(p.vacant());
  for (const auto& [u, score] : appraise_all(org, AppraisalParams{})) CHECK(score.value == 1.0);
}

TEST_CASE("every seeded employee can log in") {
  Seeded s(opts(30));
  for (std::size_t i = 0; i < s.summary.employees.size(); ++i) {
    const std::string login = "u" + std::to_string(i + 1);
    auto session = s.engine.open_session({login, login});
    CHECK(session->user == s.summary.employees[i]);
  }
  CHECK(error_kind_of([&] { s.engine.open_session({"u1", "wrong"}); }) == ErrorKind::AuthFailed);
}

TEST_CASE("seeding needs the personal data pack") {
  Engine engine;
  auto admin = engine.admin_session();
  CHECK(error_kind_of([&] { seed_demo(engine, *admin, opts(5)); }) == ErrorKind::PacksMissing);
  CHECK(engine.head() == 0);
}
