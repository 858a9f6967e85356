#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmk {

enum class ErrorCode {
  InvalidOrder,
  DimensionMismatch,
  UnsupportedGrid,
  InvalidResolution,
  NonpositiveSupport,
  NotInConeGammaK,
  InvalidHomotopyParameter,
  PositivityLost,
  AdmissibleStartRequired,
  StepCollapse,
  NoConvergence,
  ContinuationStuck,
  NotApplicable,
  OutOfRange,
  MinkowskiNotApplicable,
  InvalidProblem,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedGrid: return "UnsupportedGrid";
    case ErrorCode::InvalidResolution: return "InvalidResolution";
    case ErrorCode::NonpositiveSupport: return "NonpositiveSupport";
    case ErrorCode::NotInConeGammaK: return "NotInConeGammaK";
    case ErrorCode::InvalidHomotopyParameter: return "InvalidHomotopyParameter";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::AdmissibleStartRequired: return "AdmissibleStartRequired";
    case ErrorCode::StepCollapse: return "StepCollapse";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ContinuationStuck: return "ContinuationStuck";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MinkowskiNotApplicable: return "MinkowskiNotApplicable";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cmk
