#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "unistore/engine.hpp"
#include "unistore/service.hpp"

namespace httplib {
class Server;
}

namespace unistore {

struct ServerConfig {
  std::filesystem::path data_dir;
  std::string host = "127.0.0.1";
  int port = 7400;
  int tower_cap = 3;
  std::chrono::seconds session_ttl = std::chrono::hours(8);

  // Overrides from UNISTORE_DATA_DIR, UNISTORE_HOST, UNISTORE_PORT,
  // UNISTORE_TOWER_CAP and UNISTORE_SESSION_TTL (seconds). Throws Validation.
  static ServerConfig from_env(ServerConfig base);
  void validate() const;
  EngineConfig engine_config() const;
};

// HTTP transport over Service. Requests carry the session token either as
// "Authorization: Bearer <id>" or "X-Session-Token: <id>".
class HttpServer {
 public:
  HttpServer(Engine& engine, std::string host);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(int port);
  // Blocks until stop() is called.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  Service service_;
  std::string host_;
  std::unique_ptr<httplib::Server> server_;
};

// Opens the engine and serves until the process is stopped. Returns the
// exit status.
int serve(const ServerConfig& config);

}  // namespace unistore
