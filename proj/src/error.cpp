#include "unistore/error.hpp"

namespace unistore {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::DepthExceeded: return "DepthExceeded";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::NotAliveAtState: return "NotAliveAtState";
    case ErrorKind::UnknownConcept: return "UnknownConcept";
    case ErrorKind::UnknownDomain: return "UnknownDomain";
    case ErrorKind::UnknownAttribute: return "UnknownAttribute";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::NoneSatisfies: return "NoneSatisfies";
    case ErrorKind::Ambiguous: return "Ambiguous";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::InvalidAttribute: return "InvalidAttribute";
    case ErrorKind::Stratification: return "StratificationError";
    case ErrorKind::TowerCapExceeded: return "TowerCapExceeded";
    case ErrorKind::AccessDenied: return "AccessDenied";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::RuleRejection: return "RuleRejection";
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::ConflictsPresent: return "ConflictsPresent";
    case ErrorKind::StaleStore: return "StaleStore";
    case ErrorKind::StateBeyondHead: return "StateBeyondHead";
    case ErrorKind::AuthFailed: return "AuthFailed";
    case ErrorKind::SessionClosed: return "SessionClosed";
    case ErrorKind::NoAssignment: return "NoAssignment";
    case ErrorKind::NotVacant: return "NotVacant";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::MalformedPack: return "MalformedPack";
    case ErrorKind::PacksMissing: return "PacksMissing";
    case ErrorKind::CorruptLog: return "CorruptLog";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

std::string_view api_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::DepthExceeded:
    case ErrorKind::MalformedPack:
      return "PARSE";
    case ErrorKind::UnknownId:
    case ErrorKind::NotAliveAtState:
      return "UNKNOWN_ID";
    case ErrorKind::UnknownConcept:
    case ErrorKind::UnknownDomain:
      return "UNKNOWN_CONCEPT";
    case ErrorKind::NoneSatisfies: return "NONE_SATISFIES";
    case ErrorKind::Ambiguous: return "AMBIGUOUS";
    case ErrorKind::Stratification:
    case ErrorKind::TowerCapExceeded:
      return "STRATIFICATION";
    case ErrorKind::AccessDenied: return "ACCESS_DENIED";
    case ErrorKind::RuleRejection: return "RULE_REJECTION";
    case ErrorKind::ConflictsPresent: return "CONFLICT";
    case ErrorKind::StaleStore: return "STALE_STORE";
    case ErrorKind::StateBeyondHead: return "STATE_BEYOND_HEAD";
    case ErrorKind::AuthFailed:
    case ErrorKind::SessionClosed:
      return "AUTH_FAILED";
    case ErrorKind::NoAssignment: return "NO_ASSIGNMENT";
    case ErrorKind::UnknownAttribute:
    case ErrorKind::TypeMismatch:
    case ErrorKind::DuplicateName:
    case ErrorKind::InvalidAttribute:
    case ErrorKind::Validation:
    case ErrorKind::UnknownKind:
    case ErrorKind::NotVacant:
    case ErrorKind::InvalidParams:
    case ErrorKind::PacksMissing:
    case ErrorKind::CorruptLog:
    case ErrorKind::Io:
      return "VALIDATION";
  }
  return "VALIDATION";
}

int http_status(ErrorKind kind) {
  const auto code = api_code(kind);
  if (code == "PARSE" || code == "VALIDATION" || code == "STATE_BEYOND_HEAD") return 400;
  if (code == "AUTH_FAILED") return 401;
  if (code == "ACCESS_DENIED" || code == "NO_ASSIGNMENT") return 403;
  if (code == "UNKNOWN_ID" || code == "UNKNOWN_CONCEPT" || code == "NONE_SATISFIES") return 404;
  if (code == "STRATIFICATION") return 422;
  return 409;  // AMBIGUOUS, RULE_REJECTION, CONFLICT, STALE_STORE
}

nlohmann::json Error::to_json() const {
  nlohmann::json details = details_;
  details["kind"] = std::string(kind_name(kind_));
  return {{"code", std::string(api_code(kind_))}, {"message", what()}, {"details", details}};
}

ParseError::ParseError(std::size_t position, std::string expected, std::string found)
    : Error(ErrorKind::Parse,
            "parse error at " + std::to_string(position) + ": expected " + expected + ", found " + found,
            {{"position", position}, {"expected", expected}, {"found", found}}),
      position_(position),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

}  // namespace unistore
