#pragma once

#include <stdexcept>
#include <string>

namespace subsetlab {

enum class ErrorCode {
  InvalidDimension,
  InvalidParameter,
  NotPositiveDefinite,
  Asymmetric,
  Parse,
  EmptyDifference,
  BudgetExceeded,
  Singular,
  Config,
  Io,
  Internal,
};

/// Base exception for every failure raised by the library. The code lets the
/// CLI map failures onto its documented exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::Asymmetric: return "asymmetric";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::EmptyDifference: return "empty-difference";
    case ErrorCode::BudgetExceeded: return "budget-exceeded";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Internal: return "internal-error";
  }
  return "unknown";
}

}  // namespace subsetlab
