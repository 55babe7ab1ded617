#include "unistore/appraisal.hpp"

#include <algorithm>
#include <cmath>

#include "unistore/error.hpp"

namespace unistore {

namespace {

constexpr double kSumTolerance = 1e-9;

[[noreturn]] void unknown(const std::string& what, ObjectId id) {
  throw Error(ErrorKind::UnknownId, "unknown " + what + " " + std::to_string(id), {{"id", id}});
}

double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

void AppraisalParams::validate() const {
  for (double w : {w_s, w_p, w_local, w_child}) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::InvalidParams, "weights must lie in [0,1]", to_json());
  }
  if (std::abs(w_s + w_p - 1.0) > kSumTolerance)
    throw Error(ErrorKind::InvalidParams, "w_s + w_p must equal 1", to_json());
  if (std::abs(w_local + w_child - 1.0) > kSumTolerance)
    throw Error(ErrorKind::InvalidParams, "w_local + w_child must equal 1", to_json());
}

nlohmann::json AppraisalParams::to_json() const {
  return {{"w_s", w_s}, {"w_p", w_p}, {"w_local", w_local}, {"w_child", w_child}};
}

AppraisalParams AppraisalParams::from_snapshot(const Snapshot& snap) {
  AppraisalParams p;
  const auto* rec = snap.alive(builtin::kParamsObject);
  if (!rec) return p;
  auto read = [&](const char* key, double& out) {
    auto it = rec->values.find(key);
    if (it != rec->values.end())
      if (const auto* d = std::get_if<double>(&it->second)) out = *d;
  };
  read("w_s", p.w_s);
  read("w_p", p.w_p);
  read("w_local", p.w_local);
  read("w_child", p.w_child);
  return p;
}

AppraisalParams AppraisalParams::from_json(const nlohmann::json& j, AppraisalParams base) {
  if (!j.is_null() && !j.is_object()) throw Error(ErrorKind::InvalidParams, "params must be an object");
  auto read = [&](const char* key, double& out) {
    if (!j.is_object() || !j.contains(key)) return;
    if (!j.at(key).is_number()) throw Error(ErrorKind::InvalidParams, std::string(key) + " must be a number");
    out = j.at(key).get<double>();
  };
  read("w_s", base.w_s);
  read("w_p", base.w_p);
  read("w_local", base.w_local);
  read("w_child", base.w_child);
  base.validate();
  return base;
}

nlohmann::json UnitScore::to_json() const {
  nlohmann::json j = {{"unit", unit},
                      {"value", value},
                      {"breakdown",
                       {{"v", vacant},
                        {"e", filled},
                        {"vacancy_rate", vacancy_rate},
                        {"coverage", coverage},
                        {"staffing", 1.0 - vacancy_rate},
                        {"local", local},
                        {"children", children}}}};
  j["breakdown"]["child_mean"] = child_mean ? nlohmann::json(*child_mean) : nlohmann::json();
  return j;
}

nlohmann::json EmployeeScore::to_json() const {
  return {{"employee", employee},
          {"value", value},
          {"breakdown", {{"position", position}, {"unit", unit}, {"match", match}, {"unit_score", unit_score}}}};
}

nlohmann::json Candidate::to_json() const {
  nlohmann::json j = {{"employee", employee}, {"match", match}};
  j["current_position"] = current_position ? nlohmann::json(*current_position) : nlohmann::json();
  return j;
}

double match_score(const std::set<std::string>& required, const std::set<std::string>& possessed) {
  if (required.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& r : required) hit += possessed.count(r);
  return static_cast<double>(hit) / static_cast<double>(required.size());
}

double match_score(const OrgModel& org, ObjectId employee, ObjectId position) {
  auto pos = org.positions.find(position);
  if (pos == org.positions.end()) unknown("position", position);
  if (!std::binary_search(org.employees.begin(), org.employees.end(), employee)) unknown("employee", employee);
  return match_score(pos->second.required, org.functions_of(employee));
}

std::map<ObjectId, UnitScore> appraise_all(const OrgModel& org, const AppraisalParams& params) {
  params.validate();
  std::map<ObjectId, UnitScore> out;
  // Post-order over every tree in the forest (a well-formed org has one root).
  std::vector<std::pair<ObjectId, bool>> stack;
  for (const auto& [id, unit] : org.units)
    if (!unit.parent) stack.emplace_back(id, false);
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    const UnitInfo& unit = org.units.at(id);
    if (!expanded) {
      stack.emplace_back(id, true);
      for (ObjectId c : unit.children) stack.emplace_back(c, false);
      continue;
    }
    UnitScore s;
    s.unit = id;
    s.children = unit.children.size();
    std::vector<double> matches;
    for (ObjectId p : unit.positions) {
      const PositionInfo& pos = org.positions.at(p);
      if (pos.vacant()) {
        ++s.vacant;
      } else {
        ++s.filled;
        matches.push_back(match_score(pos.required, org.functions_of(*pos.holder)));
      }
    }
    s.vacancy_rate = s.vacant + s.filled == 0 ? 0.0 : static_cast<double>(s.vacant) / (s.vacant + s.filled);
    s.coverage = matches.empty() ? 1.0 : mean(matches);
    s.local = params.w_s * s.coverage + params.w_p * (1.0 - s.vacancy_rate);
    if (!unit.children.empty()) {
      std::vector<double> child_values;
      for (ObjectId c : unit.children) child_values.push_back(out.at(c).value);
      s.child_mean = mean(child_values);
    }
    if (!s.child_mean) {
      s.value = s.local;
    } else if (unit.positions.empty()) {
      s.value = *s.child_mean;
    } else {
      s.value = params.w_local * s.local + params.w_child * *s.child_mean;
    }
    s.value = std::clamp(s.value, 0.0, 1.0);
    out.emplace(id, s);
  }
  return out;
}

UnitScore appraise_unit(const OrgModel& org, ObjectId unit, const AppraisalParams& params) {
  if (!org.units.count(unit)) unknown("unit", unit);
  return appraise_all(org, params).at(unit);
}

EmployeeScore appraise_employee(const OrgModel& org, ObjectId employee, const AppraisalParams& params) {
  if (!std::binary_search(org.employees.begin(), org.employees.end(), employee)) unknown("employee", employee);
  auto pos = org.position_of(employee);
  if (!pos)
    throw Error(ErrorKind::NoAssignment, "employee " + std::to_string(employee) + " holds no position",
                {{"employee", employee}});
  const PositionInfo& p = org.positions.at(*pos);
  EmployeeScore s;
  s.employee = employee;
  s.position = *pos;
  s.unit = p.unit;
  s.match = match_score(p.required, org.functions_of(employee));
  s.unit_score = org.units.count(p.unit) ? appraise_all(org, params).at(p.unit).value : 0.0;
  s.value = std::clamp(params.w_s * s.match + params.w_p * s.unit_score, 0.0, 1.0);
  return s;
}

std::vector<Candidate> rank_candidates(const OrgModel& org, ObjectId position) {
  auto pos = org.positions.find(position);
  if (pos == org.positions.end()) unknown("position", position);
  if (!pos->second.vacant())
    throw Error(ErrorKind::NotVacant, "position " + std::to_string(position) + " is not vacant",
                {{"position", position}, {"holder", *pos->second.holder}});
  std::vector<Candidate> out;
  for (ObjectId e : org.employees)
    out.push_back(Candidate{e, match_score(pos->second.required, org.functions_of(e)), org.position_of(e)});
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.match != b.match) return a.match > b.match;
    return a.employee < b.employee;
  });
  return out;
}

void apply_move(OrgModel& org, ObjectId employee, ObjectId position) {
  auto pos = org.positions.find(position);
  if (pos == org.positions.end()) unknown("position", position);
  if (!std::binary_search(org.employees.begin(), org.employees.end(), employee)) unknown("employee", employee);
  if (auto old = org.position_of(employee)) org.positions.at(*old).holder.reset();
  if (pos->second.holder) org.assignment.erase(*pos->second.holder);
  pos->second.holder = employee;
  org.assignment[employee] = position;
}

}  // namespace unistore
