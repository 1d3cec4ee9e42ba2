#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psiepi {

enum class ErrorCode {
  ZeroNorm,
  NonFinite,
  BadDimension,
  BadN,
  DimensionMismatch,
  KeyMismatch,
  DegenerateDenominator,
  EtaOutOfRange,
  NoThreshold,
  NotViolating,
  InvalidScenario,
  InvalidTable,
  InvalidModel,
  EmptySetting,
  LengthMismatch,
  NotADistribution,
  ProbabilityOutOfRange,
  InvalidArgument,
  MalformedFile,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::ZeroNorm: return "ZeroNorm";
  case ErrorCode::NonFinite: return "NonFinite";
  case ErrorCode::BadDimension: return "BadDimension";
  case ErrorCode::BadN: return "BadN";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::KeyMismatch: return "KeyMismatch";
  case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
  case ErrorCode::EtaOutOfRange: return "EtaOutOfRange";
  case ErrorCode::NoThreshold: return "NoThreshold";
  case ErrorCode::NotViolating: return "NotViolating";
  case ErrorCode::InvalidScenario: return "InvalidScenario";
  case ErrorCode::InvalidTable: return "InvalidTable";
  case ErrorCode::InvalidModel: return "InvalidModel";
  case ErrorCode::EmptySetting: return "EmptySetting";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::NotADistribution: return "NotADistribution";
  case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::MalformedFile: return "MalformedFile";
  }
  return "Unknown";
}

/// Library-wide exception. Every failing precondition throws one of these
/// with a code the caller can switch on.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace psiepi
