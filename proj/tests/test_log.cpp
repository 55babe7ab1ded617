#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "unistore/log.hpp"

using namespace unistore;
using namespace testkit;

namespace {

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

// A persistent store with a few events, closed again.
std::string populate(const fs::path& dir, int events) {
  Engine::initialize(dir);
  EngineConfig config;
  config.data_dir = dir;
  Engine engine(config);
  auto admin = engine.admin_session();
  engine.submit(*admin, "define_concept", person_definition());
  for (int i = 0; i < events; ++i)
    engine.submit(*admin, "create", {{"concept", "Person"}, {"values", {{"name", "p" + std::to_string(i)}}}});
  return engine.snapshot().content_hash;
}

Engine reopen(const fs::path& dir) {
  EngineConfig config;
  config.data_dir = dir;
  return Engine(config);
}

std::int64_t corrupt_seq(const fs::path& dir) {
  try {
    EngineConfig config;
    config.data_dir = dir;
    Engine engine(config);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptLog) return e.details().value("seq", std::int64_t{-1});
    throw;
  }
  return -1;
}

}  // namespace

TEST_CASE("records are hash chained from the genesis hash") {
  EventLog log;
  for (int i = 1; i <= 3; ++i) {
    EventRecord r;
    r.seq = i;
    r.kind = "create";
    r.payload = {{"args", {{"n", i}}}, {"effects", json::array()}};
    log.append(r);
  }
  const auto& recs = log.records();
  CHECK(recs[0].prev_hash == kGenesisHash);
  CHECK(recs[1].prev_hash == recs[0].hash);
  CHECK(recs[2].hash == recs[2].compute_hash());
  CHECK_NOTHROW(EventLog::verify(recs));
  auto tampered = recs;
  tampered[1].payload["args"]["n"] = 99;
  try {
    EventLog::verify(tampered);
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptLog);
    CHECK(e.details().at("seq") == 2);
  }
}

TEST_CASE("a persistent store reopens to the same content") {
  TempDir dir;
  const std::string hash = populate(dir.path, 5);
  Engine engine = reopen(dir.path);
  CHECK(engine.head() == 6);
  CHECK(engine.snapshot().content_hash == hash);
  CHECK(read_lines(Engine::log_path(dir.path)).size() == 7);
  CHECK(json::parse(read_lines(Engine::log_path(dir.path))[0]) == EventLog::header());
}

TEST_CASE("initialising over an existing log fails") {
  TempDir dir;
  populate(dir.path, 1);
  CHECK(error_kind_of([&] { Engine::initialize(dir.path); }) == ErrorKind::Io);
  TempDir empty;
  CHECK(error_kind_of([&] { reopen(empty.path / "missing"); }) == ErrorKind::Io);
}

TEST_CASE("an edited record is detected at its sequence number") {
  TempDir dir;
  populate(dir.path, 5);
  auto lines = read_lines(Engine::log_path(dir.path));
  json rec = json::parse(lines[4]);
  rec["payload"]["args"]["values"]["name"] = "forged";
  lines[4] = rec.dump();
  write_lines(Engine::log_path(dir.path), lines);
  CHECK(corrupt_seq(dir.path) == 4);
}

TEST_CASE("a removed record breaks the chain") {
  TempDir dir;
  populate(dir.path, 5);
  auto lines = read_lines(Engine::log_path(dir.path));
  lines.erase(lines.begin() + 3);
  write_lines(Engine::log_path(dir.path), lines);
  CHECK(corrupt_seq(dir.path) == 3);
}

TEST_CASE("garbage lines and a wrong header are corruption") {
  TempDir dir;
  populate(dir.path, 2);
  auto lines = read_lines(Engine::log_path(dir.path));
  auto garbage = lines;
  garbage.push_back("{not json");
  write_lines(Engine::log_path(dir.path), garbage);
  CHECK(error_kind_of([&] { reopen(dir.path); }) == ErrorKind::CorruptLog);
  auto header = lines;
  header[0] = json{{"format", "other"}, {"version", 1}}.dump();
  write_lines(Engine::log_path(dir.path), header);
  CHECK(error_kind_of([&] { reopen(dir.path); }) == ErrorKind::CorruptLog);
}

TEST_CASE("checkpoints are verified on open") {
  TempDir dir;
  populate(dir.path, 3);
  {
    Engine engine = reopen(dir.path);
    engine.checkpoint();
  }
  CHECK_NOTHROW(reopen(dir.path));
  auto lines = read_lines(Engine::checkpoint_path(dir.path));
  REQUIRE_FALSE(lines.empty());
  json cp = json::parse(lines.back());
  cp["content_hash"] = std::string(64, 'f');
  lines.back() = cp.dump();
  write_lines(Engine::checkpoint_path(dir.path), lines);
  CHECK(error_kind_of([&] { reopen(dir.path); }) == ErrorKind::CorruptLog);
}
