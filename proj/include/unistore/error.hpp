#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace unistore {

enum class ErrorKind {
  Parse,
  DepthExceeded,
  UnknownId,
  NotAliveAtState,
  UnknownConcept,
  UnknownDomain,
  UnknownAttribute,
  TypeMismatch,
  NoneSatisfies,
  Ambiguous,
  DuplicateName,
  InvalidAttribute,
  Stratification,
  TowerCapExceeded,
  AccessDenied,
  Validation,
  RuleRejection,
  UnknownKind,
  ConflictsPresent,
  StaleStore,
  StateBeyondHead,
  AuthFailed,
  SessionClosed,
  NoAssignment,
  NotVacant,
  InvalidParams,
  MalformedPack,
  PacksMissing,
  CorruptLog,
  Io,
};

std::string_view kind_name(ErrorKind kind);

// Wire-level code (ApiError.code). Every engine error kind maps to exactly one.
std::string_view api_code(ErrorKind kind);
int http_status(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const { return kind_; }
  const nlohmann::json& details() const { return details_; }

  nlohmann::json to_json() const;

 private:
  ErrorKind kind_;
  nlohmann::json details_;
};

// Raised by the formula parser. Position is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, std::string expected, std::string found);

  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::size_t position_;
  std::string expected_;
  std::string found_;
};

}  // namespace unistore
