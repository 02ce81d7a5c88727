#pragma once

#include <stdexcept>
#include <string>

namespace dsda {

enum class ErrorCode {
  SingularMatrix,
  NotSpd,
  DimensionMismatch,
  InvalidShift,
  BudgetExceeded,
  RankDeficientFactor,
  ParseError,
  UnsupportedField,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NotSpd: return "NotSpd";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidShift: return "InvalidShift";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::RankDeficientFactor: return "RankDeficientFactor";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedField: return "UnsupportedField";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// driver can map it onto a terminal status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dsda
