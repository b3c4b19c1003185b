#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wfd {

enum class ErrorCode {
  InvalidArgument,
  DegenerateKernelAtAtom,
  NonFiniteIntegrand,
  InfiniteJumpIntensity,
  InvalidStep,
  StateExplosionGuard,
  InvalidScaling,
  SigmaNotZero,
  RegimeMismatch,
  ConfigError,
  ModelError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// the CLI can map it to an exit status and callers can branch on it.
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
    case ErrorCode::DegenerateKernelAtAtom: return "DegenerateKernelAtAtom";
    case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorCode::InfiniteJumpIntensity: return "InfiniteJumpIntensity";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::StateExplosionGuard: return "StateExplosionGuard";
    case ErrorCode::InvalidScaling: return "InvalidScaling";
    case ErrorCode::SigmaNotZero: return "SigmaNotZero";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ModelError: return "ModelError";
  }
  return "Unknown";
}

}  // namespace wfd
