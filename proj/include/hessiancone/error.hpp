#pragma once

#include <stdexcept>
#include <string>

namespace hessiancone {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  BelowThreshold,
  NotInCone,
  OutOfRange,
  BracketingFailure,
  NumericFailure,
  SubsolutionViolation,
  StepTooLarge,
  ContinuityStall,
  Io,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::BelowThreshold: return "below threshold";
    case ErrorKind::NotInCone: return "not in cone";
    case ErrorKind::OutOfRange: return "out of range";
    case ErrorKind::BracketingFailure: return "bracketing failure";
    case ErrorKind::NumericFailure: return "numeric failure";
    case ErrorKind::SubsolutionViolation: return "subsolution violation";
    case ErrorKind::StepTooLarge: return "continuity step too large";
    case ErrorKind::ContinuityStall: return "continuity stall";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Parse: return "parse error";
  }
  return "unknown";
}

/// Library-wide exception. The kind lets callers branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace hessiancone
