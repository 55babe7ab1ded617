#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "unistore/rules.hpp"
#include "unistore/store.hpp"

namespace unistore {

enum class Scenario { President, HrDirector, UnitManager, HrOfficer, Employee };
enum class Action { Read, Write, Define };

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);
std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);

// Grant targets are concept or meta names, "event:<kind>" for event kinds,
// or "*" for every concept and meta.
struct Grant {
  std::string target;
  Action action = Action::Read;
  auto operator<=>(const Grant&) const = default;
};

inline constexpr std::string_view kAllTargets = "*";

struct AccessProfile {
  Scenario scenario = Scenario::Employee;
  ObjectId user = 0;  // 0 for the built-in administrator
  ObjectId unit = 0;
  std::optional<ObjectId> position;
  bool all_units = false;
  std::set<ObjectId> visible_units;
  std::set<Grant> grants;
  bool metadata_admin = false;
  std::vector<MandatoryOverride> mandatory_overrides;

  bool has_grant(std::string_view target, Action action) const;
  bool sees_unit(ObjectId unit) const { return all_units || visible_units.count(unit) > 0; }
  nlohmann::json to_json() const;
};

// Deterministic function of the org content at `snap`.
// Throws NoAssignment when the user holds no position.
AccessProfile derive_profile(const Snapshot& snap, ObjectId user);
// Built-in administrator: president rights, no assignment.
AccessProfile administrator_profile(const Snapshot& snap);

struct Credentials {
  std::string login;
  std::string password;
};

struct Session {
  std::string id;
  ObjectId user = 0;
  std::string login;
  AccessProfile profile;
  StateIndex opened_at = 0;
  bool closed = false;
};

class SessionRegistry {
 public:
  explicit SessionRegistry(std::chrono::seconds ttl = std::chrono::hours(8)) : ttl_(ttl) {}

  std::shared_ptr<const Session> add(Session session);
  // Throws AuthFailed for unknown or expired ids, SessionClosed for closed ones.
  std::shared_ptr<const Session> get(const std::string& id);
  void close(const std::string& id);
  std::size_t open_count() const;

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    std::chrono::steady_clock::time_point last_used;
  };
  mutable std::mutex mutex_;
  std::chrono::seconds ttl_;
  std::map<std::string, Entry> sessions_;
};

struct Decision {
  bool allowed = false;
  std::string reason;

  explicit operator bool() const { return allowed; }
  static Decision allow() { return {true, {}}; }
  static Decision deny(std::string why) { return {false, std::move(why)}; }
};

// Object, concept or meta target. Allowed iff the profile grants the action
// on the target's concept and the owning unit is visible (own records only
// for the employee scenario); metadata write/define needs metadata_admin.
// Throws SessionClosed.
Decision check_access(const Session& session, Action action, ObjectId target, const Snapshot& snap);
// Grant on a concept or meta as a whole (schema visibility).
Decision check_concept(const Session& session, Action action, ObjectId concept_id, const Snapshot& snap);
Decision check_event(const Session& session, std::string_view kind);
// Scope check for a draft that is about to be created.
Decision check_draft(const Session& session, ObjectId concept_id, const ValueMap& values, const Snapshot& snap);

// Required attributes for entering an object of `concept_id`: the schema's
// required-by-default set plus every override at `snap` that applies to the
// scenario and whose condition holds against the draft. Throws UnknownConcept.
std::set<std::string> required_fields(Scenario scenario, ObjectId concept_id, const Snapshot& snap,
                                      const ValueMap& draft = {});
// required_fields for the session's scenario, after a read-grant check on the
// concept. Throws AccessDenied, UnknownConcept.
std::set<std::string> mandatory_fields(const Session& session, ObjectId concept_id, const Snapshot& snap,
                                       const ValueMap& draft = {});

}  // namespace unistore
