#pragma once

// Shared fixtures for the unit and acceptance suites: a random "Person"
// world mirrored into a naive oracle that keeps a full copy of every state,
// and a formula generator whose trees are evaluated by the oracle without
// going through the library's evaluator.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/engine.hpp"
#include "unistore/error.hpp"
#include "unistore/packs.hpp"

namespace testkit {

namespace fs = std::filesystem;
using nlohmann::json;
using unistore::ObjectId;
using unistore::StateIndex;

// ---------------------------------------------------------------------------
// Utilities

struct TempDir {
  fs::path path;
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("unistore-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen() % n; }
  std::int64_t range(std::int64_t lo, std::int64_t hi) { return lo + static_cast<std::int64_t>(below(hi - lo + 1)); }
  bool chance(int percent) { return static_cast<int>(below(100)) < percent; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
};

template <class F>
unistore::ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const unistore::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected an error");
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Installs shipped packs by name, in the given order.
inline void install_shipped(unistore::Engine& engine, const unistore::Session& session,
                            const std::vector<std::string>& names) {
  for (const auto& n : names) unistore::install_pack(engine, session, unistore::load_pack(unistore::resolve_manifest(n)));
}

inline const std::vector<std::string>& all_pack_names() {
  static const std::vector<std::string> names = {"Personal Data",
                                                 "Personnel Dynamics",
                                                 "Charges and Deductions",
                                                 "Appraisal and testing",
                                                 "Vacancies",
                                                 "Leaves and Sick-Lists",
                                                 "Training and Skills Improvement",
                                                 "Equipment Fixing"};
  return names;
}

// ---------------------------------------------------------------------------
// Person world

inline json person_definition(const std::string& name = "Person") {
  return {{"name", name},
          {"attributes",
           json::array({{{"name", "name"}, {"type", "text"}, {"required", true}},
                        {{"name", "age"}, {"type", "integer"}},
                        {{"name", "score"}, {"type", "decimal"}},
                        {{"name", "active"}, {"type", "boolean"}},
                        {{"name", "born"}, {"type", "date"}},
                        {{"name", "city"}, {"type", "text"}},
                        {{"name", "boss"}, {"type", "reference(" + name + ")"}}})}};
}

// Attribute values are kept as JSON: text and dates as strings (fixed-width
// dates order lexicographically), integers, doubles, booleans, and ids.
struct NaiveRecord {
  std::map<std::string, json> values;
};

struct NaiveMeta {
  ObjectId id = 0;
  std::string name;
  int level = 1;
  std::string domain;
  std::optional<bool> audited;
};

// One full copy of the Person population per state.
struct NaiveWorld {
  std::vector<std::map<ObjectId, NaiveRecord>> persons;  // index = state
  std::vector<std::map<ObjectId, NaiveMeta>> metas;

  NaiveWorld() {
    persons.emplace_back();
    metas.emplace_back();
  }
  StateIndex head() const { return static_cast<StateIndex>(persons.size()) - 1; }
  // Starts the next state as a copy of the previous one.
  void next() {
    persons.push_back(persons.back());
    metas.push_back(metas.back());
  }
};

inline const std::vector<std::string>& kCities() {
  static const std::vector<std::string> v = {"Moscow", "Kazan", "Omsk", "Tver", "Perm"};
  return v;
}

inline std::string random_date(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(rng.range(1950, 2005)),
                static_cast<int>(rng.range(1, 12)), static_cast<int>(rng.range(1, 28)));
  return buf;
}

// Random optional attribute values; names come from a small pool so that
// some formulas match several persons.
inline json random_person_values(Rng& rng, const std::vector<ObjectId>& alive, int name_pool) {
  json v = {{"name", "p" + std::to_string(rng.below(name_pool))}};
  if (rng.chance(85)) v["age"] = rng.range(18, 70);
  if (rng.chance(80)) v["score"] = static_cast<double>(rng.range(0, 200)) / 2.0;
  if (rng.chance(80)) v["active"] = rng.chance(50);
  if (rng.chance(75)) v["born"] = random_date(rng);
  if (rng.chance(80)) v["city"] = rng.pick(kCities());
  if (!alive.empty() && rng.chance(60)) v["boss"] = rng.pick(alive);
  return v;
}

// Applies a batch of random data events to both the engine and the oracle;
// returns the number of individuals created.
inline int random_person_batch(unistore::Engine& engine, const unistore::Session& session, NaiveWorld& world,
                               Rng& rng, int creates, int updates, int retires, int name_pool,
                               const std::string& concept_name = "Person") {
  std::vector<ObjectId> alive;
  for (const auto& [id, r] : world.persons.back()) alive.push_back(id);
  json events = json::array();
  std::vector<json> create_values;
  for (int i = 0; i < creates; ++i) {
    json v = random_person_values(rng, alive, name_pool);
    events.push_back({{"kind", "create"}, {"concept", concept_name}, {"values", v}});
    create_values.push_back(v);
  }
  std::set<ObjectId> touched;
  std::vector<std::pair<ObjectId, json>> sets;
  for (int i = 0; i < updates && !alive.empty(); ++i) {
    const ObjectId id = rng.pick(alive);
    if (!touched.insert(id).second) continue;
    json v = json::object();
    switch (rng.below(5)) {
      case 0: v["age"] = rng.range(18, 70); break;
      case 1: v["city"] = rng.chance(20) ? json(nullptr) : json(rng.pick(kCities())); break;
      case 2: v["active"] = rng.chance(50); break;
      case 3: v["score"] = static_cast<double>(rng.range(0, 200)) / 2.0; break;
      default: v["name"] = "p" + std::to_string(rng.below(name_pool)); break;
    }
    events.push_back({{"kind", "set_attr"}, {"id", id}, {"values", v}});
    sets.emplace_back(id, v);
  }
  std::vector<ObjectId> retired;
  for (int i = 0; i < retires && !alive.empty(); ++i) {
    const ObjectId id = rng.pick(alive);
    if (!touched.insert(id).second) continue;
    events.push_back({{"kind", "retire"}, {"id", id}});
    retired.push_back(id);
  }
  const unistore::Receipt r = engine.submit(session, "batch", {{"events", events}});
  world.next();
  auto& now = world.persons.back();
  for (std::size_t i = 0; i < create_values.size(); ++i) {
    NaiveRecord rec;
    for (const auto& [k, v] : create_values[i].items()) rec.values[k] = v;
    now[r.created.at(i)] = rec;
  }
  for (const auto& [id, v] : sets) {
    for (const auto& [k, val] : v.items()) {
      if (val.is_null()) {
        now[id].values.erase(k);
      } else {
        now[id].values[k] = val;
      }
    }
  }
  for (ObjectId id : retired) now.erase(id);
  return static_cast<int>(create_values.size());
}

// ---------------------------------------------------------------------------
// Formula generator and oracle evaluator

struct GenNode {
  enum class Kind { Compare, And, Or, Not, Exists, In };
  Kind kind = Kind::Compare;
  // Compare: path (first segment may be a variable), op, literal.
  std::vector<std::string> path;
  std::string op;
  json literal;               // null for the null literal
  std::string literal_var;    // comparison against a bound variable ("self" or an exists variable)
  std::string literal_kind;   // text|integer|decimal|boolean|date|id|null|var
  std::vector<GenNode> kids;  // And/Or/Not/Exists body
  std::string var;            // Exists variable
  std::string domain;         // Exists/In domain
};

inline std::string literal_text(const GenNode& n) {
  std::ostringstream os;
  if (n.literal_kind == "null") return "null";
  if (n.literal_kind == "var") return n.literal_var;
  if (n.literal_kind == "text") return "'" + n.literal.get<std::string>() + "'";
  if (n.literal_kind == "date") return "date '" + n.literal.get<std::string>() + "'";
  if (n.literal_kind == "boolean") return n.literal.get<bool>() ? "true" : "false";
  if (n.literal_kind == "decimal") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", n.literal.get<double>());
    return buf;
  }
  return std::to_string(n.literal.get<std::int64_t>());
}

inline std::string print(const GenNode& n) {
  switch (n.kind) {
    case GenNode::Kind::Compare: {
      std::string p;
      for (const auto& s : n.path) p += (p.empty() ? "" : ".") + s;
      return p + " " + n.op + " " + literal_text(n);
    }
    case GenNode::Kind::And:
    case GenNode::Kind::Or: {
      std::string out = "(";
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i) out += n.kind == GenNode::Kind::And ? " and " : " or ";
        out += print(n.kids[i]);
      }
      return out + ")";
    }
    case GenNode::Kind::Not: return "not (" + print(n.kids[0]) + ")";
    case GenNode::Kind::Exists: return "exists " + n.var + " in " + n.domain + ": (" + print(n.kids[0]) + ")";
    case GenNode::Kind::In: {
      std::string p;
      for (const auto& s : n.path) p += (p.empty() ? "" : ".") + s;
      return p + " in " + n.domain;
    }
  }
  return {};
}

struct GenOptions {
  int name_pool = 50;
  std::vector<ObjectId> ids;          // candidate ids for boss comparisons
  bool allow_exists = true;
  bool allow_in = true;
  std::string domain = "Person";
};

inline GenNode gen_compare(Rng& rng, const GenOptions& o, const std::string& root) {
  GenNode n;
  auto prefixed = [&](std::vector<std::string> p) {
    if (!root.empty()) p.insert(p.begin(), root);
    return p;
  };
  static const std::vector<std::string> all_ops = {"=", "!=", "<", "<=", ">", ">="};
  static const std::vector<std::string> eq_ops = {"=", "!="};
  const bool through_boss = rng.chance(20);
  std::vector<std::string> base = through_boss ? std::vector<std::string>{"boss"} : std::vector<std::string>{};
  auto with = [&](const std::string& attr) {
    auto p = base;
    p.push_back(attr);
    return prefixed(p);
  };
  switch (rng.below(9)) {
    case 0:
      n.path = with("name");
      n.op = rng.chance(70) ? "=" : rng.pick(all_ops);
      n.literal_kind = "text";
      n.literal = "p" + std::to_string(rng.below(o.name_pool));
      break;
    case 1:
      n.path = with("age");
      n.op = rng.pick(all_ops);
      n.literal_kind = "integer";
      n.literal = rng.range(15, 75);
      break;
    case 2:
      n.path = with("score");
      n.op = rng.pick(all_ops);
      n.literal_kind = rng.chance(50) ? "decimal" : "integer";
      if (n.literal_kind == "decimal") {
        n.literal = static_cast<double>(rng.range(0, 200)) / 2.0;
      } else {
        n.literal = rng.range(0, 100);
      }
      break;
    case 3:
      n.path = with("active");
      n.op = rng.pick(eq_ops);
      n.literal_kind = "boolean";
      n.literal = rng.chance(50);
      break;
    case 4:
      n.path = with("born");
      n.op = rng.pick(all_ops);
      n.literal_kind = "date";
      n.literal = random_date(rng);
      break;
    case 5:
      n.path = with("city");
      n.op = rng.pick(eq_ops);
      n.literal_kind = "text";
      n.literal = rng.pick(kCities());
      break;
    case 6:
      n.path = with(rng.pick(std::vector<std::string>{"city", "age", "boss", "score"}));
      n.op = rng.pick(eq_ops);
      n.literal_kind = "null";
      break;
    case 7:
      n.path = prefixed({"boss"});
      n.op = rng.pick(eq_ops);
      n.literal_kind = "id";
      n.literal = o.ids.empty() ? ObjectId{0} : rng.pick(o.ids);
      break;
    default:
      n.path = with("name");
      n.op = "=";
      n.literal_kind = "text";
      n.literal = "p" + std::to_string(rng.below(o.name_pool));
      break;
  }
  return n;
}

inline GenNode gen_formula(Rng& rng, const GenOptions& o, int depth, const std::string& root = "",
                           const std::string& outer = "") {
  const std::uint64_t choice = depth <= 0 ? 0 : rng.below(10);
  GenNode n;
  if (choice <= 3) return gen_compare(rng, o, root);
  if (choice <= 5) {
    n.kind = rng.chance(50) ? GenNode::Kind::And : GenNode::Kind::Or;
    const int k = 2 + static_cast<int>(rng.below(2));
    for (int i = 0; i < k; ++i) n.kids.push_back(gen_formula(rng, o, depth - 1, root, outer));
    return n;
  }
  if (choice == 6) {
    n.kind = GenNode::Kind::Not;
    n.kids.push_back(gen_formula(rng, o, depth - 1, root, outer));
    return n;
  }
  if (choice == 7 && o.allow_in) {
    n.kind = GenNode::Kind::In;
    n.path = root.empty() ? std::vector<std::string>{"boss"} : std::vector<std::string>{root, "boss"};
    n.domain = o.domain;
    return n;
  }
  if (choice >= 8 && o.allow_exists && outer.empty()) {
    n.kind = GenNode::Kind::Exists;
    n.var = "x";
    n.domain = o.domain;
    GenNode link;
    link.path = {"x", "boss"};
    link.op = "=";
    link.literal_kind = "var";
    link.literal_var = "self";
    GenNode body;
    body.kind = GenNode::Kind::And;
    body.kids.push_back(link);
    body.kids.push_back(gen_formula(rng, o, depth - 1, "x", "x"));
    if (rng.chance(30)) {
      n.kids.push_back(gen_formula(rng, o, depth - 1, "x", "x"));  // unlinked body
    } else {
      n.kids.push_back(body);
    }
    return n;
  }
  return gen_compare(rng, o, root);
}

// Evaluates a generated tree against the oracle population at one state.
class Oracle {
 public:
  explicit Oracle(const std::map<ObjectId, NaiveRecord>& people) : people_(people) {}

  bool eval(const GenNode& n, ObjectId self) {
    vars_["self"] = self;
    return eval_node(n);
  }

  std::vector<ObjectId> filter(const GenNode& n) {
    std::vector<ObjectId> out;
    for (const auto& [id, r] : people_)
      if (eval(n, id)) out.push_back(id);
    return out;
  }

 private:
  // Resolves a path to (present, value). Hops through missing or dead objects yield absent.
  std::optional<json> resolve(const std::vector<std::string>& path) {
    std::size_t k = 0;
    ObjectId cur = vars_.at("self");
    if (vars_.count(path.front())) {
      cur = vars_.at(path.front());
      k = 1;
      if (path.size() == 1) return json(cur);
    }
    for (; k < path.size(); ++k) {
      auto it = people_.find(cur);
      if (it == people_.end()) return std::nullopt;
      auto v = it->second.values.find(path[k]);
      if (v == it->second.values.end()) return std::nullopt;
      if (k + 1 == path.size()) return v->second;
      cur = v->second.get<ObjectId>();
    }
    return std::nullopt;
  }

  template <class T>
  static bool cmp(const T& a, const T& b, const std::string& op) {
    if (op == "=") return a == b;
    if (op == "!=") return a != b;
    if (op == "<") return a < b;
    if (op == "<=") return a <= b;
    if (op == ">") return a > b;
    return a >= b;
  }

  bool eval_node(const GenNode& n) {
    switch (n.kind) {
      case GenNode::Kind::And:
        for (const auto& k : n.kids)
          if (!eval_node(k)) return false;
        return true;
      case GenNode::Kind::Or:
        for (const auto& k : n.kids)
          if (eval_node(k)) return true;
        return false;
      case GenNode::Kind::Not: return !eval_node(n.kids[0]);
      case GenNode::Kind::Exists: {
        for (const auto& [id, r] : people_) {
          vars_[n.var] = id;
          if (eval_node(n.kids[0])) {
            vars_.erase(n.var);
            return true;
          }
        }
        vars_.erase(n.var);
        return false;
      }
      case GenNode::Kind::In: {
        auto v = resolve(n.path);
        return v && people_.count(v->get<ObjectId>()) > 0;
      }
      case GenNode::Kind::Compare: break;
    }
    auto v = resolve(n.path);
    if (n.literal_kind == "null") return n.op == "=" ? !v.has_value() : v.has_value();
    if (!v) return false;
    if (n.literal_kind == "var") return cmp(v->get<ObjectId>(), vars_.at(n.literal_var), n.op);
    if (n.literal_kind == "text" || n.literal_kind == "date")
      return cmp(v->get<std::string>(), n.literal.get<std::string>(), n.op);
    if (n.literal_kind == "boolean") return cmp(v->get<bool>(), n.literal.get<bool>(), n.op);
    if (n.literal_kind == "id") return cmp(v->get<ObjectId>(), n.literal.get<ObjectId>(), n.op);
    if (v->is_number_integer() && n.literal.is_number_integer())
      return cmp(v->get<std::int64_t>(), n.literal.get<std::int64_t>(), n.op);
    return cmp(v->get<double>(), n.literal.get<double>(), n.op);
  }

  const std::map<ObjectId, NaiveRecord>& people_;
  std::map<std::string, ObjectId> vars_;
};

}  // namespace testkit
