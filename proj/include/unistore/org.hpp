#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "unistore/store.hpp"

namespace unistore {

// The eight HR component packs; concepts they deliver are "HR concepts".
inline constexpr std::array<std::string_view, 8> kHrPackNames = {
    "Personal Data",          "Personnel Dynamics", "Charges and Deductions",          "Appraisal and testing",
    "Vacancies",              "Leaves and Sick-Lists", "Training and Skills Improvement", "Equipment Fixing"};
inline constexpr std::string_view kPersonalDataPack = "Personal Data";

bool is_hr_pack(std::string_view origin);

// Org structure as read from the Personal Data concepts at one state:
// OrgUnit(name, parent), Position(title, unit, holder, assigned_at),
// WorkingFunction(tag), PositionFunction(position, function),
// EmployeeFunction(employee, function), Employee.
struct PositionInfo {
  ObjectId id = 0;
  ObjectId unit = 0;
  std::string title;
  std::set<std::string> required;  // working-function tags
  std::optional<ObjectId> holder;
  StateIndex assigned_at = 0;

  bool vacant() const { return !holder.has_value(); }
};

struct UnitInfo {
  ObjectId id = 0;
  std::string name;
  std::optional<ObjectId> parent;
  std::vector<ObjectId> children;
  std::vector<ObjectId> positions;
};

struct OrgModel {
  std::map<ObjectId, UnitInfo> units;
  std::optional<ObjectId> root;
  std::map<ObjectId, PositionInfo> positions;
  std::map<ObjectId, std::set<std::string>> functions;  // employee -> possessed tags
  std::map<ObjectId, ObjectId> assignment;              // employee -> position
  std::vector<ObjectId> employees;                      // alive, ascending

  // Throws PacksMissing when the org concepts are not defined.
  static OrgModel from_snapshot(const Snapshot& snap);

  std::vector<ObjectId> subtree(ObjectId unit) const;
  bool in_subtree(ObjectId ancestor, ObjectId unit) const;
  std::optional<ObjectId> position_of(ObjectId employee) const;
  const std::set<std::string>& functions_of(ObjectId employee) const;
};

// Owning unit / employee of an object, following its reference attributes:
// the first reference to OrgUnit gives the unit, a reference to Employee or
// Position inherits that object's unit.
struct Ownership {
  std::optional<ObjectId> unit;
  std::optional<ObjectId> employee;
};

Ownership owner_of(const Snapshot& snap, ObjectId object);
Ownership owner_of_values(const Snapshot& snap, ObjectId concept_id, const ValueMap& values, ObjectId self = 0);

}  // namespace unistore
