#include "unistore/log.hpp"

#include "unistore/digest.hpp"
#include "unistore/error.hpp"

namespace unistore {

nlohmann::json EventRecord::to_json(bool with_hash) const {
  nlohmann::json j = {{"seq", seq},        {"ts", ts}, {"actor", actor}, {"kind", kind}, {"payload", payload},
                      {"prev_hash", prev_hash}};
  if (with_hash) j["hash"] = hash;
  return j;
}

EventRecord EventRecord::from_json(const nlohmann::json& j) {
  EventRecord r;
  r.seq = j.at("seq").get<StateIndex>();
  r.ts = j.at("ts").get<std::string>();
  r.actor = j.at("actor").get<ObjectId>();
  r.kind = j.at("kind").get<std::string>();
  r.payload = j.at("payload");
  r.prev_hash = j.at("prev_hash").get<std::string>();
  r.hash = j.at("hash").get<std::string>();
  return r;
}

std::string EventRecord::compute_hash() const { return sha256_hex(to_json(false).dump()); }

nlohmann::json EventLog::header() {
  return {{"format", kLogFormatName}, {"version", kLogFormatVersion}, {"checksum", kChecksumAlgorithm}};
}

void EventLog::create(const std::filesystem::path& file) {
  if (std::filesystem::exists(file))
    throw Error(ErrorKind::Io, "log already exists: " + file.string(), {{"path", file.string()}});
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + file.string(), {{"path", file.string()}});
  out << header().dump() << '\n';
  if (!out.flush()) throw Error(ErrorKind::Io, "cannot write " + file.string(), {{"path", file.string()}});
}

EventLog EventLog::open(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open log " + file.string(), {{"path", file.string()}});
  EventLog log;
  log.path_ = file;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::CorruptLog, "log has no header", {{"seq", 0}});
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("format") != kLogFormatName || h.at("version") != kLogFormatVersion)
      throw Error(ErrorKind::CorruptLog, "unsupported log format " + line, {{"seq", 0}});
    if (h.at("checksum") != kChecksumAlgorithm)
      throw Error(ErrorKind::CorruptLog, "unsupported checksum " + h.at("checksum").dump(), {{"seq", 0}});
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::CorruptLog, std::string("malformed log header: ") + ex.what(), {{"seq", 0}});
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const StateIndex expected = log.head() + 1;
    try {
      log.records_.push_back(EventRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::CorruptLog, "malformed record at seq " + std::to_string(expected) + ": " + ex.what(),
                  {{"seq", expected}});
    }
  }
  verify(log.records_);
  log.out_ = std::make_unique<std::ofstream>(file, std::ios::app);
  if (!*log.out_) throw Error(ErrorKind::Io, "cannot append to " + file.string(), {{"path", file.string()}});
  return log;
}

void EventLog::verify(const std::vector<EventRecord>& records) {
  std::string prev = kGenesisHash;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto seq = static_cast<StateIndex>(i + 1);
    auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::CorruptLog, "hash chain broken at seq " + std::to_string(seq) + ": " + what,
                  {{"seq", seq}});
    };
    if (r.seq != seq) fail("expected seq " + std::to_string(seq) + ", found " + std::to_string(r.seq));
    if (r.prev_hash != prev) fail("prev_hash mismatch");
    if (r.compute_hash() != r.hash) fail("record hash mismatch");
    prev = r.hash;
  }
}

void EventLog::append(EventRecord& record) {
  record.seq = head() + 1;
  record.prev_hash = last_hash();
  record.hash = record.compute_hash();
  if (out_) {
    *out_ << record.to_json().dump() << '\n';
    if (!out_->flush()) throw Error(ErrorKind::Io, "cannot append to " + path_.string(), {{"path", path_.string()}});
  }
  records_.push_back(record);
}

}  // namespace unistore
