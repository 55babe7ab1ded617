#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/types.hpp"

namespace unistore {

struct EventRecord {
  StateIndex seq = 0;
  std::string ts;  // informational only
  ObjectId actor = 0;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();  // {"args": request, "effects": [...]}
  std::string prev_hash;
  std::string hash;

  nlohmann::json to_json(bool with_hash = true) const;
  static EventRecord from_json(const nlohmann::json& j);
  std::string compute_hash() const;
};

inline constexpr int kLogFormatVersion = 1;
inline constexpr const char* kLogFormatName = "unistore-log";
inline const std::string kGenesisHash(64, '0');

// Append-only, hash-chained event log. Persistent logs are newline-delimited
// JSON: one header line, then one canonical record per line.
class EventLog {
 public:
  EventLog() = default;  // in-memory

  // Loads and verifies an existing log file. Throws CorruptLog, Io.
  static EventLog open(const std::filesystem::path& file);
  // Writes a fresh header; fails if the file already exists.
  static void create(const std::filesystem::path& file);

  static nlohmann::json header();

  // Fills prev_hash and hash, writes and flushes the record.
  void append(EventRecord& record);

  const std::vector<EventRecord>& records() const { return records_; }
  StateIndex head() const { return static_cast<StateIndex>(records_.size()); }
  const std::string& last_hash() const { return records_.empty() ? kGenesisHash : records_.back().hash; }
  bool persistent() const { return out_ != nullptr; }

  // Throws CorruptLog naming the first bad seq.
  static void verify(const std::vector<EventRecord>& records);

 private:
  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> out_;
  std::vector<EventRecord> records_;
};

}  // namespace unistore
