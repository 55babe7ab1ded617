#include "unistore/seed.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "unistore/digest.hpp"
#include "unistore/error.hpp"

namespace unistore {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 4> kDivisions = {"Finance", "Human Resources", "Operations", "Sales"};
constexpr std::array<std::array<const char*, 4>, 4> kDepartments = {{
    {"Accounting", "Treasury", "Audit", "Planning"},
    {"Recruitment", "Training", "Compensation", "Records"},
    {"Logistics", "Maintenance", "Procurement", "Quality"},
    {"Domestic Sales", "Export", "Marketing", "Customer Care"},
}};
constexpr std::array<const char*, 12> kTags = {"accounting", "recruiting", "engineering", "sales",
                                               "legal",      "logistics",  "it_support",  "training",
                                               "management", "analytics",  "procurement", "maintenance"};
constexpr std::array<const char*, 12> kSurnames = {"Ivanov",  "Petrov", "Sidorov", "Smirnov", "Kuznetsov", "Popov",
                                                   "Vasiliev", "Sokolov", "Mikhailov", "Novikov", "Fedorov", "Morozov"};
constexpr std::array<const char*, 8> kGiven = {"Anna", "Boris", "Elena", "Igor", "Maria", "Oleg", "Olga", "Pavel"};
constexpr int kBatch = 200;

const std::vector<std::string> kRequiredConcepts = {"OrgUnit",          "Position", "Employee", "WorkingFunction",
                                                    "PositionFunction", "EmployeeFunction", "Credential"};

// Raw modulo keeps the stream identical across standard libraries.
struct Rng {
  std::mt19937 gen;
  explicit Rng(std::uint32_t seed) : gen(seed) {}
  std::uint32_t below(std::uint32_t n) { return n == 0 ? 0 : gen() % n; }
  bool chance(std::uint32_t percent) { return below(100) < percent; }
};

struct PositionPlan {
  std::size_t unit = 0;  // index into units
  std::string title;
  std::vector<std::size_t> tags;
  bool leadership = false;
};

std::string pad(int n, int width) {
  std::string s = std::to_string(n);
  return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0, '0') + s;
}

std::string date_text(int year, int month, int day) { return pad(year, 4) + "-" + pad(month, 2) + "-" + pad(day, 2); }

}  // namespace

json SeedSummary::to_json() const {
  return {{"state", state},
          {"root", root},
          {"units", units.size()},
          {"positions", positions.size()},
          {"employees", employees.size()}};
}

SeedSummary seed_demo(Engine& engine, const Session& session, const SeedOptions& options) {
  if (options.employees < 0) throw Error(ErrorKind::Validation, "employee count must be non-negative");
  std::vector<ObjectId> tag_ids;
  engine.read(std::nullopt, [&](const Snapshot& snap) {
    for (const auto& name : kRequiredConcepts) {
      auto id = snap.lookup(name);
      if (!id || !snap.is_concept(*id))
        throw Error(ErrorKind::PacksMissing, "seeding needs the Personal Data pack (missing " + name + ")",
                    {{"missing", name}});
    }
    const ObjectId wf = *snap.lookup("WorkingFunction");
    for (const char* tag : kTags) {
      ObjectId found = 0;
      for (ObjectId f : snap.extent(wf)) {
        auto it = snap.alive(f)->values.find("tag");
        if (it != snap.alive(f)->values.end() && to_display(it->second) == tag) found = f;
      }
      tag_ids.push_back(found);
    }
  });

  Rng rng(options.seed);
  SeedSummary summary;

  // Working functions missing from the vocabulary.
  {
    json events = json::array();
    for (std::size_t i = 0; i < kTags.size(); ++i)
      if (!tag_ids[i]) events.push_back({{"kind", "create"}, {"concept", "WorkingFunction"}, {"values", {{"tag", kTags[i]}}}});
    if (!events.empty()) {
      const Receipt r = engine.submit(session, "batch", {{"events", events}});
      std::size_t k = 0;
      for (std::size_t i = 0; i < kTags.size(); ++i)
        if (!tag_ids[i]) tag_ids[i] = r.created[k++];
    }
  }

  // Units: root, divisions, departments; references to earlier rows of the
  // same batch resolve against the ids the engine allocates in order.
  {
    ObjectId next = 0;
    engine.read(std::nullopt, [&](const Snapshot& snap) { next = snap.store().next_id(); });
    json events = json::array();
    events.push_back({{"kind", "create"}, {"concept", "OrgUnit"}, {"values", {{"name", "Corporation"}}}});
    const ObjectId root = next;
    std::vector<ObjectId> ids{root};
    for (std::size_t d = 0; d < kDivisions.size(); ++d) {
      const ObjectId div = next + static_cast<ObjectId>(ids.size());
      events.push_back({{"kind", "create"}, {"concept", "OrgUnit"}, {"values", {{"name", kDivisions[d]}, {"parent", root}}}});
      ids.push_back(div);
      for (const char* dept : kDepartments[d]) {
        events.push_back({{"kind", "create"}, {"concept", "OrgUnit"}, {"values", {{"name", dept}, {"parent", div}}}});
        ids.push_back(next + static_cast<ObjectId>(ids.size()));
      }
    }
    const Receipt r = engine.submit(session, "batch", {{"events", events}});
    if (r.created != ids) throw Error(ErrorKind::Validation, "unexpected id allocation while seeding units");
    summary.units = ids;
    summary.root = root;
  }

  // Unit indices: 0 root, 1 + 5d division d, 2 + 5d + k department k of d.
  auto division = [](std::size_t d) { return 1 + 5 * d; };
  auto department = [](std::size_t d, std::size_t k) { return 2 + 5 * d + k; };
  const std::size_t hr = 1;  // "Human Resources"
  auto pick_tags = [&](std::size_t count, std::vector<std::size_t> base) {
    while (base.size() < count) {
      const std::size_t t = rng.below(kTags.size());
      if (std::find(base.begin(), base.end(), t) == base.end()) base.push_back(t);
    }
    return base;
  };
  const std::size_t management = 8;

  std::vector<PositionPlan> plans;
  plans.push_back({0, "President", pick_tags(2, {management}), true});
  plans.push_back({0, "HR Director", pick_tags(2, {management}), true});
  for (std::size_t d = 0; d < kDivisions.size(); ++d) plans.push_back({division(d), "Division Head", pick_tags(2, {management}), true});
  for (std::size_t d = 0; d < kDivisions.size(); ++d)
    for (std::size_t k = 0; k < 4; ++k) plans.push_back({department(d, k), "Department Head", pick_tags(2, {management}), true});
  plans.push_back({department(hr, 0), "HR Officer", pick_tags(2, {1}), true});
  plans.push_back({department(hr, 3), "HR Officer", pick_tags(2, {1}), true});

  const int n = options.employees;
  const int leadership = static_cast<int>(plans.size());
  const int vacancies = options.perfect ? 0 : std::max(3, n / 10);
  const int total = options.perfect ? n : std::max(leadership, n + vacancies);
  if (options.perfect && n < leadership) plans.resize(static_cast<std::size_t>(n));
  for (int i = leadership; i < total; ++i) {
    const std::size_t d = rng.below(4), k = rng.below(4);
    plans.push_back({department(d, k), "Specialist", pick_tags(1 + rng.below(3), {}), false});
  }

  // Which positions stay vacant: a shuffled choice among staff positions.
  std::vector<bool> filled(plans.size(), true);
  {
    std::vector<std::size_t> staff;
    for (std::size_t i = 0; i < plans.size(); ++i)
      if (!plans[i].leadership) staff.push_back(i);
    for (std::size_t i = staff.size(); i > 1; --i) std::swap(staff[i - 1], staff[rng.below(static_cast<std::uint32_t>(i))]);
    int open = static_cast<int>(plans.size()) - n;
    for (std::size_t i = 0; i < staff.size() && open > 0; ++i, --open) filled[staff[i]] = false;
    for (std::size_t i = plans.size(); i-- > 0 && open > 0;)
      if (filled[i]) filled[i] = false, --open;
  }

  // Positions and their required functions.
  for (std::size_t start = 0; start < plans.size(); start += kBatch / 4) {
    ObjectId next = 0;
    engine.read(std::nullopt, [&](const Snapshot& snap) { next = snap.store().next_id(); });
    json events = json::array();
    std::vector<ObjectId> expected;
    const std::size_t end = std::min(plans.size(), start + kBatch / 4);
    for (std::size_t i = start; i < end; ++i) {
      const ObjectId pos = next++;
      expected.push_back(pos);
      events.push_back({{"kind", "create"},
                        {"concept", "Position"},
                        {"values", {{"title", plans[i].title}, {"unit", summary.units[plans[i].unit]}}}});
      for (std::size_t t : plans[i].tags) {
        events.push_back({{"kind", "create"}, {"concept", "PositionFunction"}, {"values", {{"position", pos}, {"function", tag_ids[t]}}}});
        ++next;
      }
    }
    const Receipt r = engine.submit(session, "batch", {{"events", events}});
    for (ObjectId id : expected) {
      if (std::find(r.created.begin(), r.created.end(), id) == r.created.end())
        throw Error(ErrorKind::Validation, "unexpected id allocation while seeding positions");
      summary.positions.push_back(id);
    }
  }

  // Employees: record, functions, login, and the position they hold.
  std::vector<std::size_t> holder_of;  // employee index -> plan index
  for (std::size_t i = 0; i < plans.size(); ++i)
    if (filled[i]) holder_of.push_back(i);
  for (int start = 0; start < n; start += kBatch / 4) {
    ObjectId next = 0;
    StateIndex state = 0;
    engine.read(std::nullopt, [&](const Snapshot& snap) {
      next = snap.store().next_id();
      state = snap.state() + 1;
    });
    json events = json::array();
    std::vector<ObjectId> expected;
    const int end = std::min(n, start + kBatch / 4);
    for (int e = start; e < end; ++e) {
      const std::size_t plan_index = holder_of[static_cast<std::size_t>(e)];
      const PositionPlan& plan = plans[plan_index];
      const ObjectId emp = next++;
      expected.push_back(emp);
      const std::string login = "u" + std::to_string(e + 1);
      json values = {{"name", std::string(kSurnames[rng.below(kSurnames.size())]) + " " + kGiven[rng.below(kGiven.size())]},
                     {"hire_date", date_text(1995 + static_cast<int>(rng.below(26)), 1 + static_cast<int>(rng.below(12)),
                                             1 + static_cast<int>(rng.below(28)))},
                     {"birth_date", date_text(1950 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(12)),
                                              1 + static_cast<int>(rng.below(28)))},
                     {"dept", summary.units[plan.unit]},
                     {"status", "active"},
                     {"email", login + "@corp.example"}};
      if (rng.chance(10)) {
        values["citizenship"] = "foreign";
        values["visa_no"] = "V" + pad(e + 1, 6);
      } else {
        values["citizenship"] = "domestic";
      }
      events.push_back({{"kind", "create"}, {"concept", "Employee"}, {"values", values}});

      std::vector<std::size_t> possessed;
      if (options.perfect) {
        possessed = plan.tags;
      } else {
        for (std::size_t t : plan.tags)
          if (rng.chance(70)) possessed.push_back(t);
        const std::uint32_t extra = rng.below(3);
        for (std::uint32_t x = 0; x < extra; ++x) {
          const std::size_t t = rng.below(kTags.size());
          if (std::find(possessed.begin(), possessed.end(), t) == possessed.end()) possessed.push_back(t);
        }
      }
      for (std::size_t t : possessed) {
        events.push_back({{"kind", "create"}, {"concept", "EmployeeFunction"}, {"values", {{"employee", emp}, {"function", tag_ids[t]}}}});
        ++next;
      }
      events.push_back({{"kind", "create"},
                        {"concept", "Credential"},
                        {"values", {{"employee", emp}, {"login", login}, {"secret_sha256", sha256_hex(login)}}}});
      ++next;
      events.push_back({{"kind", "set_attr"},
                        {"id", summary.positions[plan_index]},
                        {"values", {{"holder", emp}, {"assigned_at", state}}}});
    }
    const Receipt r = engine.submit(session, "batch", {{"events", events}});
    for (ObjectId id : expected) {
      if (std::find(r.created.begin(), r.created.end(), id) == r.created.end())
        throw Error(ErrorKind::Validation, "unexpected id allocation while seeding employees");
      summary.employees.push_back(id);
    }
  }
  summary.state = engine.head();
  return summary;
}

}  // namespace unistore
