#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtvf {

enum class ErrorCode {
  // geometry
  SingularProjection,
  BeyondInjectivityRadius,
  DegenerateJump,
  OutOfComparisonRange,
  RadViolation,
  RampTooWide,
  DegenerateTriangle,
  WindowTooLong,
  DomainError,
  // solver
  CflViolation,
  StepUnderflow,
  // verifier
  IncompatibleSnapshots,
  NotNPC,
  WrongManifold,
  // input
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exit-code family an error belongs to on the command line.
enum class ErrorFamily { Config, Geometry, Verification };

ErrorFamily family_of(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace mtvf
