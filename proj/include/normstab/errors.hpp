#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace normstab {

/// Failure modes reported by the library. Each operation documents which of
/// these it can raise; the C API and the CLI map them onto status codes.
enum class ErrorCode {
  InvalidArgument,
  ConfigError,
  NonConvergence,
  IllConditioned,
  Inconclusive,
  NotAnEquilibrium,
  RankDeficientChart,
  NewtonDiverged,
  RadiusTooLarge,
  OutOfChart,
  StepSizeUnderflow,
  DomainExit,
  NoStablePart,
  SingularBand,
  BracketInvalid,
  TailsTooFat,
  BlowUp,
  GridTooCoarse,
  InvalidRadius,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that describe bad input rather than a numerical failure.
inline bool is_config_error(ErrorCode code) noexcept {
  return code == ErrorCode::ConfigError || code == ErrorCode::InvalidArgument;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::NotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorCode::RankDeficientChart: return "RankDeficientChart";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::DomainExit: return "DomainExit";
    case ErrorCode::NoStablePart: return "NoStablePart";
    case ErrorCode::SingularBand: return "SingularBand";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::TailsTooFat: return "TailsTooFat";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
  }
  return "Unknown";
}

}  // namespace normstab
