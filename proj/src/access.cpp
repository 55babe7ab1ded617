#include "unistore/access.hpp"

#include <array>
#include <random>

#include "unistore/error.hpp"
#include "unistore/eval.hpp"
#include "unistore/org.hpp"

namespace unistore {

namespace {

constexpr std::array<std::string_view, 5> kScenarioNames = {"president", "hr_director", "unit_manager", "hr_officer",
                                                            "employee"};
constexpr std::array<std::string_view, 3> kActionNames = {"read", "write", "define"};

constexpr std::array<std::string_view, 4> kDataKinds = {"create", "set_attr", "retire", "batch"};
constexpr std::array<std::string_view, 4> kDynamicsKinds = {"hire", "transfer", "dismiss", "re_enroll"};
constexpr std::string_view kLeaveKind = "leave_request";
constexpr std::string_view kAllEvents = "event:*";

std::string event_target(std::string_view kind) { return "event:" + std::string(kind); }

void check_open(const Session& session) {
  if (session.closed) throw Error(ErrorKind::SessionClosed, "session is closed", {{"session", session.id}});
}

void grant_all(AccessProfile& p) {
  for (Action a : {Action::Read, Action::Write, Action::Define}) p.grants.insert({std::string(kAllTargets), a});
  p.grants.insert({std::string(kAllEvents), Action::Write});
  p.metadata_admin = true;
  p.all_units = true;
}

std::vector<ObjectId> all_units(const Snapshot& snap) {
  auto unit_c = snap.lookup("OrgUnit");
  if (!unit_c || !snap.is_concept(*unit_c)) return {};
  return snap.extent(*unit_c);
}

Scenario scenario_for_title(const Snapshot& snap, const std::string& title) {
  auto table = snap.lookup("ScenarioTitle");
  if (!table || !snap.is_concept(*table)) return Scenario::Employee;
  for (ObjectId row : snap.extent(*table)) {
    const auto& values = snap.alive(row)->values;
    auto t = values.find("title");
    auto s = values.find("scenario");
    if (t == values.end() || s == values.end()) continue;
    if (to_display(t->second) != title) continue;
    if (auto sc = parse_scenario(to_display(s->second))) return *sc;
  }
  return Scenario::Employee;
}

void capture_overrides(AccessProfile& p, const Snapshot& snap) {
  const std::string name(scenario_name(p.scenario));
  for (const auto* ov : snap.overrides()) {
    if (ov->scenarios.empty() || std::find(ov->scenarios.begin(), ov->scenarios.end(), name) != ov->scenarios.end())
      p.mandatory_overrides.push_back(*ov);
  }
}

}  // namespace

std::string_view scenario_name(Scenario s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i)
    if (kScenarioNames[i] == name) return static_cast<Scenario>(i);
  return std::nullopt;
}

std::string_view action_name(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

std::optional<Action> parse_action(std::string_view name) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i)
    if (kActionNames[i] == name) return static_cast<Action>(i);
  return std::nullopt;
}

bool AccessProfile::has_grant(std::string_view target, Action action) const {
  if (grants.count({std::string(target), action})) return true;
  const bool is_event = target.rfind("event:", 0) == 0;
  return grants.count({std::string(is_event ? kAllEvents : kAllTargets), action}) > 0;
}

nlohmann::json AccessProfile::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& grant : grants) g.push_back({{"target", grant.target}, {"action", action_name(grant.action)}});
  nlohmann::json ov = nlohmann::json::array();
  for (const auto& o : mandatory_overrides) {
    auto d = o.definition();
    d["id"] = o.id;
    ov.push_back(d);
  }
  nlohmann::json j = {{"scenario", scenario_name(scenario)},
                      {"user", user},
                      {"unit", unit},
                      {"all_units", all_units},
                      {"visible_units", visible_units},
                      {"grants", g},
                      {"metadata_admin", metadata_admin},
                      {"mandatory_overrides", ov}};
  j["position"] = position ? nlohmann::json(*position) : nlohmann::json();
  return j;
}

AccessProfile derive_profile(const Snapshot& snap, ObjectId user) {
  const OrgModel org = OrgModel::from_snapshot(snap);
  auto pos = org.position_of(user);
  if (!pos)
    throw Error(ErrorKind::NoAssignment, "user " + std::to_string(user) + " holds no position at state " +
                                             std::to_string(snap.state()),
                {{"user", user}, {"state", snap.state()}});
  const PositionInfo& position = org.positions.at(*pos);

  AccessProfile p;
  p.user = user;
  p.position = *pos;
  p.unit = position.unit;
  p.scenario = scenario_for_title(snap, position.title);

  switch (p.scenario) {
    case Scenario::President:
    case Scenario::HrDirector:
      grant_all(p);
      for (ObjectId u : all_units(snap)) p.visible_units.insert(u);
      break;
    case Scenario::UnitManager:
      p.grants.insert({std::string(kAllTargets), Action::Read});
      for (auto kind : kDynamicsKinds) p.grants.insert({event_target(kind), Action::Write});
      for (ObjectId c : snap.all_concepts()) {
        const auto* schema = snap.schema(c);
        if (schema->origin == "Personnel Dynamics") p.grants.insert({schema->name, Action::Write});
      }
      for (ObjectId u : org.subtree(p.unit)) p.visible_units.insert(u);
      break;
    case Scenario::HrOfficer: {
      std::set<ObjectId> hr;
      for (ObjectId c : snap.all_concepts()) {
        const auto* schema = snap.schema(c);
        if (!is_hr_pack(schema->origin)) continue;
        hr.insert(c);
        p.grants.insert({schema->name, Action::Read});
        p.grants.insert({schema->name, Action::Write});
      }
      for (ObjectId m : snap.all_metas()) {
        if (hr.count(snap.member_concept(m))) p.grants.insert({snap.name_of(m), Action::Read});
      }
      for (auto kind : kDataKinds) p.grants.insert({event_target(kind), Action::Write});
      for (auto kind : kDynamicsKinds) p.grants.insert({event_target(kind), Action::Write});
      p.grants.insert({event_target(kLeaveKind), Action::Write});
      for (ObjectId u : org.subtree(p.unit)) p.visible_units.insert(u);
      break;
    }
    case Scenario::Employee:
      for (ObjectId c : snap.all_concepts()) {
        const auto* schema = snap.schema(c);
        if (schema->origin == kPersonalDataPack) p.grants.insert({schema->name, Action::Read});
      }
      p.grants.insert({event_target(kLeaveKind), Action::Write});
      p.visible_units.insert(p.unit);
      break;
  }
  capture_overrides(p, snap);
  return p;
}

AccessProfile administrator_profile(const Snapshot& snap) {
  AccessProfile p;
  p.scenario = Scenario::President;
  grant_all(p);
  for (ObjectId u : all_units(snap)) p.visible_units.insert(u);
  capture_overrides(p, snap);
  return p;
}

// ---------------------------------------------------------------------------
// Sessions

std::shared_ptr<const Session> SessionRegistry::add(Session session) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  session.id = buf;
  auto ptr = std::make_shared<Session>(std::move(session));
  std::lock_guard lock(mutex_);
  sessions_[ptr->id] = Entry{ptr, std::chrono::steady_clock::now()};
  return ptr;
}

std::shared_ptr<const Session> SessionRegistry::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::AuthFailed, "unknown session", {{"session", id}});
  const auto now = std::chrono::steady_clock::now();
  if (now - it->second.last_used > ttl_) {
    sessions_.erase(it);
    throw Error(ErrorKind::AuthFailed, "session expired", {{"session", id}});
  }
  if (it->second.session->closed) throw Error(ErrorKind::SessionClosed, "session is closed", {{"session", id}});
  it->second.last_used = now;
  return it->second.session;
}

void SessionRegistry::close(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::AuthFailed, "unknown session", {{"session", id}});
  it->second.session->closed = true;
}

std::size_t SessionRegistry::open_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [id, e] : sessions_) n += e.session->closed ? 0 : 1;
  return n;
}

// ---------------------------------------------------------------------------
// Decisions

Decision check_access(const Session& session, Action action, ObjectId target, const Snapshot& snap) {
  check_open(session);
  const auto& p = session.profile;
  const auto* rec = snap.alive(target);
  if (!rec) return Decision::deny("target " + std::to_string(target) + " is not alive at state " +
                                  std::to_string(snap.state()));

  if (builtin::is_builtin_concept(rec->concept_id)) {
    if (action != Action::Read) {
      if (!p.metadata_admin) return Decision::deny("metadata_admin required");
      return Decision::allow();
    }
    if (p.has_grant(snap.name_of(rec->concept_id), Action::Read)) return Decision::allow();
    // A concept or meta is readable as an object when the domain itself is.
    if ((rec->concept_id == builtin::kConcept || rec->concept_id == builtin::kMetaObject) &&
        p.has_grant(snap.name_of(target), Action::Read))
      return Decision::allow();
    return Decision::deny("no read grant on metadata " + snap.name_of(rec->concept_id));
  }

  const std::string concept_name = snap.name_of(rec->concept_id);
  if (action == Action::Define && !p.metadata_admin) return Decision::deny("metadata_admin required");
  if (!p.has_grant(concept_name, action))
    return Decision::deny("no " + std::string(action_name(action)) + " grant on " + concept_name);

  const Ownership own = owner_of(snap, target);
  if (p.scenario == Scenario::Employee) {
    if (own.employee != p.user) return Decision::deny("not an own record");
    return Decision::allow();
  }
  if (own.unit && !p.sees_unit(*own.unit)) return Decision::deny("out-of-scope unit");
  return Decision::allow();
}

Decision check_concept(const Session& session, Action action, ObjectId concept_id, const Snapshot& snap) {
  check_open(session);
  if (!snap.is_concept(concept_id) && !snap.is_meta(concept_id))
    throw Error(ErrorKind::UnknownConcept, "no concept or meta " + std::to_string(concept_id) + " at state " +
                                               std::to_string(snap.state()),
                {{"concept", concept_id}});
  const auto& p = session.profile;
  const bool metadata = builtin::is_builtin_concept(concept_id) || snap.is_meta(concept_id);
  if ((action == Action::Define || (metadata && action == Action::Write)) && !p.metadata_admin)
    return Decision::deny("metadata_admin required");
  const std::string name = snap.name_of(concept_id);
  if (!p.has_grant(name, action)) return Decision::deny("no " + std::string(action_name(action)) + " grant on " + name);
  return Decision::allow();
}

Decision check_event(const Session& session, std::string_view kind) {
  check_open(session);
  if (session.profile.has_grant(event_target(kind), Action::Write)) return Decision::allow();
  return Decision::deny("event kind '" + std::string(kind) + "' not granted to scenario " +
                        std::string(scenario_name(session.profile.scenario)));
}

Decision check_draft(const Session& session, ObjectId concept_id, const ValueMap& values, const Snapshot& snap) {
  check_open(session);
  const auto& p = session.profile;
  const Ownership own = owner_of_values(snap, concept_id, values);
  if (p.scenario == Scenario::Employee) {
    if (own.employee != p.user) return Decision::deny("not an own record");
    return Decision::allow();
  }
  if (own.unit && !p.sees_unit(*own.unit)) return Decision::deny("out-of-scope unit");
  return Decision::allow();
}

std::set<std::string> required_fields(Scenario scenario, ObjectId concept_id, const Snapshot& snap,
                                      const ValueMap& draft) {
  const auto& schema = snap.schema_or_throw(concept_id);
  std::set<std::string> out;
  for (const auto& a : schema.attributes)
    if (a.required) out.insert(a.name);
  const std::string name(scenario_name(scenario));
  const Binding binding{Subject::of_draft(concept_id, draft), {}};
  for (const auto* ov : snap.overrides()) {
    if (ov->concept_name != schema.name) continue;
    if (!ov->scenarios.empty() && std::find(ov->scenarios.begin(), ov->scenarios.end(), name) == ov->scenarios.end())
      continue;
    if (!ov->condition.empty() && !evaluate(ov->condition, binding, snap)) continue;
    for (const auto& a : ov->attributes)
      if (schema.attribute(a)) out.insert(a);
  }
  return out;
}

std::set<std::string> mandatory_fields(const Session& session, ObjectId concept_id, const Snapshot& snap,
                                       const ValueMap& draft) {
  const auto& schema = snap.schema_or_throw(concept_id);
  if (auto d = check_concept(session, Action::Read, concept_id, snap); !d)
    throw Error(ErrorKind::AccessDenied, d.reason, {{"concept", schema.name}});
  return required_fields(session.profile.scenario, concept_id, snap, draft);
}

}  // namespace unistore
