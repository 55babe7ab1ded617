#include "unistore/org.hpp"

#include <algorithm>

#include "unistore/error.hpp"

namespace unistore {

namespace {

std::optional<ObjectId> ref_value(const ValueMap& values, const std::string& attr) {
  auto it = values.find(attr);
  if (it == values.end()) return std::nullopt;
  if (const auto* r = std::get_if<Ref>(&it->second)) return r->id;
  return std::nullopt;
}

std::string text_value(const ValueMap& values, const std::string& attr) {
  auto it = values.find(attr);
  if (it == values.end()) return {};
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return to_display(it->second);
}

const std::set<std::string> kNoFunctions;

}  // namespace

bool is_hr_pack(std::string_view origin) {
  return std::find(kHrPackNames.begin(), kHrPackNames.end(), origin) != kHrPackNames.end();
}

OrgModel OrgModel::from_snapshot(const Snapshot& snap) {
  const auto unit_c = snap.lookup("OrgUnit");
  const auto pos_c = snap.lookup("Position");
  const auto emp_c = snap.lookup("Employee");
  if (!unit_c || !pos_c || !emp_c || !snap.is_concept(*unit_c) || !snap.is_concept(*pos_c) || !snap.is_concept(*emp_c))
    throw Error(ErrorKind::PacksMissing, "org structure concepts (OrgUnit, Position, Employee) are not defined",
                {{"state", snap.state()}});

  OrgModel m;
  m.employees = snap.extent(*emp_c);
  for (ObjectId u : snap.extent(*unit_c)) {
    const auto& values = snap.alive(u)->values;
    UnitInfo info;
    info.id = u;
    info.name = text_value(values, "name");
    info.parent = ref_value(values, "parent");
    if (info.parent && !snap.alive(*info.parent)) info.parent.reset();
    m.units.emplace(u, std::move(info));
  }
  for (auto& [id, unit] : m.units) {
    if (unit.parent && m.units.count(*unit.parent)) {
      m.units[*unit.parent].children.push_back(id);
    } else if (!m.root) {
      m.root = id;
    }
  }

  std::map<ObjectId, std::string> tags;
  if (auto wf = snap.lookup("WorkingFunction"); wf && snap.is_concept(*wf)) {
    for (ObjectId f : snap.extent(*wf)) tags[f] = text_value(snap.alive(f)->values, "tag");
  }
  auto tag_of = [&](const ValueMap& values) -> std::optional<std::string> {
    auto f = ref_value(values, "function");
    if (!f) return std::nullopt;
    auto it = tags.find(*f);
    if (it == tags.end()) return std::nullopt;
    return it->second;
  };

  for (ObjectId p : snap.extent(*pos_c)) {
    const auto& values = snap.alive(p)->values;
    PositionInfo info;
    info.id = p;
    info.unit = ref_value(values, "unit").value_or(0);
    info.title = text_value(values, "title");
    if (auto h = ref_value(values, "holder"); h && snap.is_member(*h, *emp_c)) info.holder = h;
    if (auto it = values.find("assigned_at"); it != values.end()) {
      if (const auto* n = std::get_if<std::int64_t>(&it->second)) info.assigned_at = *n;
    }
    if (info.holder && !m.assignment.count(*info.holder)) m.assignment[*info.holder] = p;
    if (auto uit = m.units.find(info.unit); uit != m.units.end()) uit->second.positions.push_back(p);
    m.positions.emplace(p, std::move(info));
  }

  if (auto pf = snap.lookup("PositionFunction"); pf && snap.is_concept(*pf)) {
    for (ObjectId link : snap.extent(*pf)) {
      const auto& values = snap.alive(link)->values;
      auto p = ref_value(values, "position");
      auto tag = tag_of(values);
      if (!p || !tag) continue;
      if (auto it = m.positions.find(*p); it != m.positions.end()) it->second.required.insert(*tag);
    }
  }
  if (auto ef = snap.lookup("EmployeeFunction"); ef && snap.is_concept(*ef)) {
    for (ObjectId link : snap.extent(*ef)) {
      const auto& values = snap.alive(link)->values;
      auto e = ref_value(values, "employee");
      auto tag = tag_of(values);
      if (e && tag) m.functions[*e].insert(*tag);
    }
  }
  return m;
}

std::vector<ObjectId> OrgModel::subtree(ObjectId unit) const {
  std::vector<ObjectId> out;
  if (!units.count(unit)) return out;
  std::vector<ObjectId> stack{unit};
  while (!stack.empty()) {
    ObjectId u = stack.back();
    stack.pop_back();
    out.push_back(u);
    for (ObjectId c : units.at(u).children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool OrgModel::in_subtree(ObjectId ancestor, ObjectId unit) const {
  for (int guard = 0; guard < 1024; ++guard) {
    if (unit == ancestor) return true;
    auto it = units.find(unit);
    if (it == units.end() || !it->second.parent) return false;
    unit = *it->second.parent;
  }
  return false;
}

std::optional<ObjectId> OrgModel::position_of(ObjectId employee) const {
  auto it = assignment.find(employee);
  if (it == assignment.end()) return std::nullopt;
  return it->second;
}

const std::set<std::string>& OrgModel::functions_of(ObjectId employee) const {
  auto it = functions.find(employee);
  return it == functions.end() ? kNoFunctions : it->second;
}

namespace {

Ownership owner_impl(const Snapshot& snap, ObjectId concept_id, const ValueMap& values, ObjectId self, int depth);

Ownership owner_of_id(const Snapshot& snap, ObjectId id, int depth) {
  const auto* rec = snap.alive(id);
  if (!rec || depth > 4) return {};
  return owner_impl(snap, rec->concept_id, rec->values, id, depth);
}

Ownership owner_impl(const Snapshot& snap, ObjectId concept_id, const ValueMap& values, ObjectId self, int depth) {
  const auto* schema = snap.schema(concept_id);
  if (!schema) return {};
  Ownership own;
  if (schema->name == "OrgUnit") {
    if (self) own.unit = self;
    return own;
  }
  if (schema->name == "Employee" && self) own.employee = self;
  for (const auto& spec : schema->attributes) {
    if (spec.type != ValueType::Reference) continue;
    auto ref = ref_value(values, spec.name);
    if (!ref) continue;
    const std::string target = snap.name_of(spec.target);
    if (target == "OrgUnit") {
      if (!own.unit) own.unit = *ref;
    } else if (target == "Employee") {
      if (!own.employee) own.employee = *ref;
      if (!own.unit) own.unit = owner_of_id(snap, *ref, depth + 1).unit;
    } else if (target == "Position") {
      if (!own.unit) own.unit = owner_of_id(snap, *ref, depth + 1).unit;
    }
  }
  return own;
}

}  // namespace

Ownership owner_of(const Snapshot& snap, ObjectId object) { return owner_of_id(snap, object, 0); }

Ownership owner_of_values(const Snapshot& snap, ObjectId concept_id, const ValueMap& values, ObjectId self) {
  return owner_impl(snap, concept_id, values, self, 0);
}

}  // namespace unistore
