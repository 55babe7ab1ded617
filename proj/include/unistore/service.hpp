#pragma once

#include <map>
#include <string>

#include "json.hpp"
#include "unistore/engine.hpp"
#include "unistore/error.hpp"

namespace unistore {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string token;  // session id; empty when absent
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Structured error body {code, message, details}.
nlohmann::json api_error_body(const Error& error);

inline constexpr int kDefaultPageSize = 200;
inline constexpr int kMaxPageSize = 5000;

// Transport-free request dispatcher for the wire API. Every failure,
// including malformed input and unknown routes, comes back as an ApiError
// body; handle() itself never throws.
class Service {
 public:
  explicit Service(Engine& engine) : engine_(engine) {}

  ApiResponse handle(const ApiRequest& request);

 private:
  nlohmann::json dispatch(const ApiRequest& request, int& status);

  Engine& engine_;
};

}  // namespace unistore
