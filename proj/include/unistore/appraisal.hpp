#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/org.hpp"

namespace unistore {

struct AppraisalParams {
  double w_s = 0.5;
  double w_p = 0.5;
  double w_local = 0.5;
  double w_child = 0.5;

  // Throws InvalidParams unless every weight is in [0,1] and both pairs sum to 1.
  void validate() const;
  nlohmann::json to_json() const;
  // Stored parameters (the built-in AppraisalParams object).
  static AppraisalParams from_snapshot(const Snapshot& snap);
  // Overrides keys present in `j` on top of `base`; validates the result.
  static AppraisalParams from_json(const nlohmann::json& j, AppraisalParams base);
};

struct UnitScore {
  ObjectId unit = 0;
  double value = 0.0;
  int vacant = 0;  // v
  int filled = 0;  // e
  double vacancy_rate = 0.0;
  double coverage = 1.0;
  double local = 0.0;  // L(u)
  std::optional<double> child_mean;
  std::size_t children = 0;

  nlohmann::json to_json() const;
};

struct EmployeeScore {
  ObjectId employee = 0;
  ObjectId position = 0;
  ObjectId unit = 0;
  double match = 0.0;
  double unit_score = 0.0;
  double value = 0.0;

  nlohmann::json to_json() const;
};

struct Candidate {
  ObjectId employee = 0;
  double match = 0.0;
  std::optional<ObjectId> current_position;

  nlohmann::json to_json() const;
};

// |required ∩ possessed| / |required|; 1 when nothing is required.
double match_score(const std::set<std::string>& required, const std::set<std::string>& possessed);
// Throws UnknownId.
double match_score(const OrgModel& org, ObjectId employee, ObjectId position);

// Every unit's F, computed bottom-up.
std::map<ObjectId, UnitScore> appraise_all(const OrgModel& org, const AppraisalParams& params);
// Throws UnknownId, InvalidParams.
UnitScore appraise_unit(const OrgModel& org, ObjectId unit, const AppraisalParams& params);
// w_s·match(employee, position) + w_p·F(unit). Throws UnknownId, NoAssignment.
EmployeeScore appraise_employee(const OrgModel& org, ObjectId employee, const AppraisalParams& params);
// Alive employees by descending match, ties by ascending id. Throws UnknownId, NotVacant.
std::vector<Candidate> rank_candidates(const OrgModel& org, ObjectId position);

// Hypothetical reassignment on a model copy (what-if exploration).
void apply_move(OrgModel& org, ObjectId employee, ObjectId position);

}  // namespace unistore
