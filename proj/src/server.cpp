#include "unistore/server.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>

#include "httplib.h"
#include "unistore/error.hpp"

namespace unistore {

namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

int env_int(const char* name, int fallback) {
  const std::string text = env(name);
  if (text.empty()) return fallback;
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::Validation, std::string(name) + " must be an integer", {{"variable", name}});
  return v;
}

std::string token_of(const httplib::Request& req) {
  const std::string auth = req.get_header_value("Authorization");
  const std::string bearer = "Bearer ";
  if (auth.rfind(bearer, 0) == 0) return auth.substr(bearer.size());
  return req.get_header_value("X-Session-Token");
}

}  // namespace

ServerConfig ServerConfig::from_env(ServerConfig base) {
  if (auto d = env("UNISTORE_DATA_DIR"); !d.empty()) base.data_dir = d;
  if (auto h = env("UNISTORE_HOST"); !h.empty()) base.host = h;
  base.port = env_int("UNISTORE_PORT", base.port);
  base.tower_cap = env_int("UNISTORE_TOWER_CAP", base.tower_cap);
  base.session_ttl = std::chrono::seconds(env_int("UNISTORE_SESSION_TTL", static_cast<int>(base.session_ttl.count())));
  return base;
}

void ServerConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorKind::Validation, "port must lie in 0..65535", {{"port", port}});
  if (tower_cap < 2) throw Error(ErrorKind::Validation, "tower cap must be at least 2", {{"tower_cap", tower_cap}});
  if (session_ttl.count() <= 0) throw Error(ErrorKind::Validation, "session ttl must be positive");
  if (data_dir.empty()) throw Error(ErrorKind::Validation, "a data directory is required");
}

EngineConfig ServerConfig::engine_config() const {
  EngineConfig c;
  c.data_dir = data_dir;
  c.tower.max_level = tower_cap;
  c.session_ttl = session_ttl;
  return c;
}

HttpServer::HttpServer(Engine& engine, std::string host)
    : service_(engine), host_(std::move(host)), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [k, v] : req.params) request.query[k] = v;
    request.body = req.body;
    request.token = token_of(req);
    const ApiResponse response = service_.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Delete(".*", handler);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type, X-Session-Token"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(R"({"code":"VALIDATION","message":"internal error","details":{}})", "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(int port) {
  if (port == 0) return server_->bind_to_any_port(host_);
  return server_->bind_to_port(host_, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

int serve(const ServerConfig& config) {
  config.validate();
  Engine engine(config.engine_config());
  HttpServer server(engine, config.host);
  const int port = server.bind(config.port);
  if (port < 0) {
    std::cerr << "cannot bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  std::cout << "serving " << config.data_dir.string() << " on http://" << config.host << ":" << port << " at state "
            << engine.head() << std::endl;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace unistore
