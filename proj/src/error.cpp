#include "fieldnav/error.hpp"

namespace fieldnav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::SeedOccupied: return "SeedOccupied";
    case ErrorCode::GoalOccupied: return "GoalOccupied";
    case ErrorCode::StartOccupied: return "StartOccupied";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Stalled: return "Stalled";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::NoPathExists: return "NoPathExists";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::SensorInsideObstacle: return "SensorInsideObstacle";
    case ErrorCode::ParamsInfeasible: return "ParamsInfeasible";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroTruthNorm: return "ZeroTruthNorm";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace fieldnav
