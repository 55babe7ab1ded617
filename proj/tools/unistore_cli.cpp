#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unistore/appraisal.hpp"
#include "unistore/engine.hpp"
#include "unistore/error.hpp"
#include "unistore/eval.hpp"
#include "unistore/org.hpp"
#include "unistore/packs.hpp"
#include "unistore/seed.hpp"
#include "unistore/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace unistore;

namespace {

struct Globals {
  std::string data_dir;
  std::string login;
  std::string password;
  int tower_cap = 3;
};

std::string default_data_dir() {
  const char* v = std::getenv("UNISTORE_DATA_DIR");
  return v && *v ? v : "unistore-data";
}

EngineConfig engine_config(const Globals& g) {
  EngineConfig c;
  c.data_dir = g.data_dir;
  c.tower.max_level = g.tower_cap;
  return c;
}

std::shared_ptr<const Session> login(Engine& engine, const Globals& g) {
  if (g.login.empty()) return engine.admin_session();
  return engine.open_session(Credentials{g.login, g.password});
}

std::string csv_cell(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void print_plan_summary(const MergePlan& plan) {
  std::cout << "pack " << plan.pack << " " << plan.version << ": " << plan.additions.size() << " new concepts, "
            << plan.matches.size() << " matched, " << plan.meta_additions.size() << " metas, "
            << plan.rule_additions.size() << " rules, " << plan.override_additions.size() << " overrides, "
            << plan.seed.size() << " seed rows, " << plan.conflicts.size() << " conflicts\n";
  for (const auto& c : plan.conflicts) std::cout << "  conflict: " << c.to_json().dump() << "\n";
}

int install(const Globals& g, const std::string& manifest) {
  Engine engine(engine_config(g));
  const auto session = login(engine, g);
  const ComponentPack pack = load_pack(resolve_manifest(manifest));
  const MergePlan plan = engine.read(std::nullopt, [&](const Snapshot& snap) { return analyze_pack(pack, snap, engine.config().tower); });
  print_plan_summary(plan);
  const StateIndex state = apply_plan(engine, *session, plan);
  std::cout << (plan.is_noop() ? "already applied; " : "applied; ") << "head state " << state << "\n";
  return 0;
}

void print_unit(const UnitScore& s, const OrgModel& org) {
  const auto it = org.units.find(s.unit);
  std::cout << "unit " << s.unit << (it != org.units.end() ? " (" + it->second.name + ")" : std::string()) << "\n";
  std::cout << "  value " << s.value << "\n";
  std::cout << s.to_json().dump(2) << "\n";
}

int bench(int ops) {
  Engine engine;
  const auto session = engine.admin_session();
  engine.submit(*session, "define_concept",
                {{"name", "BenchItem"},
                 {"attributes", json::array({{{"name", "label"}, {"type", "text"}, {"required", true}},
                                             {{"name", "weight"}, {"type", "integer"}}})}});
  std::vector<double> latencies;
  latencies.reserve(static_cast<std::size_t>(ops));
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < ops; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    engine.submit(*session, "create", {{"concept", "BenchItem"}, {"values", {{"label", "item " + std::to_string(i)}, {"weight", i}}}});
    latencies.push_back(std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count());
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::sort(latencies.begin(), latencies.end());
  auto pct = [&](double p) {
    if (latencies.empty()) return 0.0;
    return latencies[std::min(latencies.size() - 1, static_cast<std::size_t>(p * static_cast<double>(latencies.size())))];
  };
  const auto q0 = std::chrono::steady_clock::now();
  const auto count = engine.read(std::nullopt, [&](const Snapshot& snap) {
    return snap.extent(*snap.lookup("BenchItem")).size();
  });
  const double scan_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - q0).count();
  json report = {{"ops", ops},
                 {"seconds", total},
                 {"ops_per_second", total > 0 ? ops / total : 0.0},
                 {"p50_us", pct(0.50)},
                 {"p99_us", pct(0.99)},
                 {"extent_size", count},
                 {"extent_ms", scan_ms},
                 {"head", engine.head()}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"unistore: uniform object store for enterprise data and metadata"};
  app.require_subcommand(1);
  Globals g;
  g.data_dir = default_data_dir();
  app.add_option("--data-dir", g.data_dir, "Data directory (env UNISTORE_DATA_DIR)");
  app.add_option("--login", g.login, "Act as this login instead of the administrator");
  app.add_option("--password", g.password, "Password for --login");
  app.add_option("--tower-cap", g.tower_cap, "Highest metadata level")->check(CLI::Range(2, 16));

  auto* init = app.add_subcommand("init", "Create an empty store");

  ServerConfig server;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the wire API");
  serve_cmd->add_option("--port", server.port, "Port (env UNISTORE_PORT)");
  serve_cmd->add_option("--host", server.host, "Bind address (env UNISTORE_HOST)");

  auto* pack = app.add_subcommand("pack", "Component packs");
  pack->require_subcommand(1);
  std::string manifest;
  auto* pack_load = pack->add_subcommand("load", "Analyze and apply a manifest file");
  pack_load->add_option("manifest", manifest, "Manifest path")->required();
  std::string pack_name;
  auto* pack_apply = pack->add_subcommand("apply", "Analyze and apply a shipped pack by name");
  pack_apply->add_option("name", pack_name, "Pack name, e.g. \"Personal Data\"")->required();
  std::string analyze_target;
  auto* pack_analyze = pack->add_subcommand("analyze", "Print the merge plan without applying it");
  pack_analyze->add_option("manifest", analyze_target, "Manifest path or shipped pack name")->required();
  auto* pack_list = pack->add_subcommand("list", "List shipped manifests");

  SeedOptions seed_opts;
  auto* seed = app.add_subcommand("seed", "Populate a demo corporation");
  seed->add_option("--employees", seed_opts.employees, "Employee count")->required()->check(CLI::NonNegativeNumber);
  seed->add_flag("--perfect", seed_opts.perfect, "Fill every position with a perfect match");
  seed->add_option("--seed", seed_opts.seed, "Random seed");

  std::optional<ObjectId> unit, employee;
  std::optional<StateIndex> state;
  bool as_json = false;
  auto* appraise = app.add_subcommand("appraise", "Appraisal score of a unit or employee");
  appraise->add_option("--unit", unit, "Org unit id (default: root)");
  appraise->add_option("--employee", employee, "Employee id");
  appraise->add_option("--state", state, "State index (default: head)");
  appraise->add_flag("--json", as_json, "Print the full score table as JSON");

  std::string domain, formula;
  bool individuate = false;
  auto* query = app.add_subcommand("query", "Evaluate a formula over a domain");
  query->add_option("--domain", domain, "Concept or meta name")->required();
  query->add_option("--formula", formula, "Formula text")->required();
  query->add_flag("--individuate", individuate, "Require exactly one match");
  query->add_option("--state", state, "State index (default: head)");

  StateIndex to = 0;
  auto* replay = app.add_subcommand("replay", "Rebuild the store from the log up to a state");
  replay->add_option("--to", to, "Target state")->required();
  auto* rollback = app.add_subcommand("rollback", "Roll the store back to an earlier state");
  rollback->add_option("--to", to, "Target state")->required();

  std::string format = "json";
  std::string out_dir;
  auto* exp = app.add_subcommand("export", "Export the store content");
  exp->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  exp->add_option("--out", out_dir, "Directory for CSV files (default: stdout)");
  exp->add_option("--state", state, "State index (default: head)");

  int ops = 1000;
  auto* bench_cmd = app.add_subcommand("bench", "Measure in-memory event throughput");
  bench_cmd->add_option("--ops", ops, "Number of create events")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (init->parsed()) {
    Engine::initialize(g.data_dir);
    std::cout << "initialized " << g.data_dir << " at state 0\n";
    return 0;
  }
  if (serve_cmd->parsed()) {
    ServerConfig base = ServerConfig::from_env(ServerConfig{});
    if (serve_cmd->count("--port")) base.port = server.port;
    if (serve_cmd->count("--host")) base.host = server.host;
    base.data_dir = g.data_dir;
    base.tower_cap = g.tower_cap;
    return serve(base);
  }
  if (pack_list->parsed()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(shipped_packs_dir()))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const ComponentPack p = load_pack(f);
      std::cout << p.name << "\t" << p.version << "\t" << f.string() << "\n";
    }
    return 0;
  }
  if (pack_load->parsed()) return install(g, manifest);
  if (pack_apply->parsed()) return install(g, pack_name);
  if (pack_analyze->parsed()) {
    Engine engine(engine_config(g));
    const ComponentPack p = load_pack(resolve_manifest(analyze_target));
    const MergePlan plan = engine.read(std::nullopt, [&](const Snapshot& snap) { return analyze_pack(p, snap, engine.config().tower); });
    std::cout << plan.to_json().dump(2) << "\n";
    return 0;
  }
  if (seed->parsed()) {
    Engine engine(engine_config(g));
    const auto session = login(engine, g);
    const SeedSummary s = seed_demo(engine, *session, seed_opts);
    std::cout << s.to_json().dump() << "\nhead state " << s.state << "\n";
    return 0;
  }
  if (appraise->parsed()) {
    Engine engine(engine_config(g));
    engine.read(state, [&](const Snapshot& snap) {
      const OrgModel org = OrgModel::from_snapshot(snap);
      const AppraisalParams params = AppraisalParams::from_snapshot(snap);
      std::cout << "state " << snap.state() << "\n";
      if (employee) {
        std::cout << appraise_employee(org, *employee, params).to_json().dump(2) << "\n";
        return;
      }
      if (as_json) {
        json all = json::array();
        for (const auto& [id, s] : appraise_all(org, params)) all.push_back(s.to_json());
        std::cout << all.dump(2) << "\n";
        return;
      }
      const ObjectId target = unit ? *unit : org.root.value_or(0);
      print_unit(appraise_unit(org, target, params), org);
    });
    return 0;
  }
  if (query->parsed()) {
    Engine engine(engine_config(g));
    const Formula f = Formula::parse(formula);
    engine.read(state, [&](const Snapshot& snap) {
      const ObjectId d = snap.resolve_domain(domain);
      if (individuate) {
        const ObjectId id = snap.individuate(f, d);
        std::cout << snap.describe(id).to_json().dump() << "\n";
        return;
      }
      typecheck(f, snap.member_concept(d), snap);
      std::size_t n = 0;
      for (ObjectId id : snap.members(d)) {
        if (!evaluate(f, id, snap)) continue;
        std::cout << snap.describe(id).to_json().dump() << "\n";
        ++n;
      }
      std::cout << n << " objects at state " << snap.state() << "\n";
    });
    return 0;
  }
  if (replay->parsed()) {
    Engine engine(engine_config(g));
    const StoreSnapshot s = engine.replay(to);
    const StoreSnapshot live = engine.snapshot(to);
    std::cout << "state " << s.state << "\ncontent_hash " << s.content_hash << "\n"
              << (s == live ? "matches the live store" : "DIFFERS from the live store") << "\n";
    return s == live ? 0 : 1;
  }
  if (rollback->parsed()) {
    Engine engine(engine_config(g));
    const auto session = login(engine, g);
    const StateIndex s = engine.rollback(*session, to);
    std::cout << "rolled back to " << to << "; head state " << s << "\n";
    return 0;
  }
  if (exp->parsed()) {
    Engine engine(engine_config(g));
    engine.read(state, [&](const Snapshot& snap) {
      if (format == "json") {
        std::cout << snap.store().content(snap.state()).dump(2) << "\n";
        return;
      }
      if (!out_dir.empty()) fs::create_directories(out_dir);
      for (ObjectId c : snap.all_concepts()) {
        const ConceptSchema* schema = snap.schema(c);
        const auto ids = snap.extent(c);
        if (ids.empty()) continue;
        std::ofstream file;
        std::ostream* os = &std::cout;
        if (!out_dir.empty()) {
          file.open(fs::path(out_dir) / (schema->name + ".csv"));
          os = &file;
        } else {
          std::cout << "# " << schema->name << "\n";
        }
        *os << "id";
        for (const auto& a : schema->attributes) *os << "," << csv_cell(a.name);
        *os << "\n";
        for (ObjectId id : ids) {
          const auto* rec = snap.alive(id);
          *os << id;
          for (const auto& a : schema->attributes) {
            auto it = rec->values.find(a.name);
            *os << "," << (it == rec->values.end() ? std::string() : csv_cell(to_display(it->second)));
          }
          *os << "\n";
        }
      }
    });
    return 0;
  }
  if (bench_cmd->parsed()) return bench(ops);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << api_code(e.kind()) << " (" << kind_name(e.kind()) << "): " << e.what() << "\n";
    if (!e.details().empty()) std::cerr << "details: " << e.details().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: VALIDATION: " << e.what() << "\n";
    return 1;
  }
}
