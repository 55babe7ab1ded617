#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/access.hpp"
#include "unistore/log.hpp"
#include "unistore/store.hpp"

namespace unistore {

struct EngineConfig {
  std::filesystem::path data_dir;  // empty keeps everything in memory
  TowerConfig tower;
  std::string admin_login = "admin";
  std::string admin_password = "admin";
  std::chrono::seconds session_ttl = std::chrono::hours(8);
  StateIndex checkpoint_every = 256;
};

struct Receipt {
  StateIndex state = 0;
  std::vector<ObjectId> created;
  std::vector<std::string> audit;

  nlohmann::json to_json() const;
};

struct StoreSnapshot {
  StateIndex state = 0;
  std::string content_hash;

  bool operator==(const StoreSnapshot&) const = default;
};

// Event kinds accepted by submit().
const std::vector<std::string>& event_kinds();

class Engine {
 public:
  explicit Engine(EngineConfig config = {});

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Creates the data directory and an empty log. Throws Io when a log exists.
  static void initialize(const std::filesystem::path& data_dir);
  static std::filesystem::path log_path(const std::filesystem::path& data_dir);
  static std::filesystem::path checkpoint_path(const std::filesystem::path& data_dir);

  const EngineConfig& config() const { return config_; }

  // Sessions. Throws AuthFailed, NoAssignment.
  std::shared_ptr<const Session> open_session(const Credentials& credentials);
  std::shared_ptr<const Session> admin_session();
  std::shared_ptr<const Session> session(const std::string& id) { return sessions_.get(id); }
  void close_session(const std::string& id) { sessions_.close(id); }

  // Single-writer mutation path. A rejected submit leaves head, log and
  // store untouched. Throws AccessDenied, Validation, RuleRejection,
  // UnknownKind and the schema/formula errors of metadata events.
  Receipt submit(const Session& session, const std::string& kind, const nlohmann::json& payload);
  ObjectId register_rule(const Session& session, const nlohmann::json& definition);
  StateIndex rollback(const Session& session, StateIndex to);

  // Runs `f(snapshot)` under the read lock; state defaults to head.
  template <class F>
  decltype(auto) read(std::optional<StateIndex> state, F&& f) const {
    std::shared_lock lock(mutex_);
    return std::forward<F>(f)(state ? store_.at(*state) : store_.at_head());
  }

  StateIndex head() const;
  StoreSnapshot snapshot(std::optional<StateIndex> state = std::nullopt) const;
  // Folds log records 1..upto into a fresh store. Throws StateBeyondHead.
  StoreSnapshot replay(StateIndex upto) const;
  std::vector<EventRecord> log(StateIndex from, StateIndex to) const;
  // Appends (head, content_hash) to the checkpoint sidecar.
  void checkpoint();

 private:
  void fold(Store& store, const EventRecord& record) const;
  void verify_checkpoints();
  void write_checkpoint_locked();

  EngineConfig config_;
  mutable std::shared_mutex mutex_;
  Store store_;
  EventLog log_;
  SessionRegistry sessions_;
  StateIndex last_checkpoint_ = -1;
};

}  // namespace unistore
