#include "mtvf/errors.hpp"

namespace mtvf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::BeyondInjectivityRadius: return "BeyondInjectivityRadius";
    case ErrorCode::DegenerateJump: return "DegenerateJump";
    case ErrorCode::OutOfComparisonRange: return "OutOfComparisonRange";
    case ErrorCode::RadViolation: return "RadViolation";
    case ErrorCode::RampTooWide: return "RampTooWide";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::IncompatibleSnapshots: return "IncompatibleSnapshots";
    case ErrorCode::NotNPC: return "NotNPC";
    case ErrorCode::WrongManifold: return "WrongManifold";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorFamily family_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
      return ErrorFamily::Config;
    case ErrorCode::IncompatibleSnapshots:
    case ErrorCode::NotNPC:
    case ErrorCode::WrongManifold:
      return ErrorFamily::Verification;
    default:
      return ErrorFamily::Geometry;
  }
}

}  // namespace mtvf
