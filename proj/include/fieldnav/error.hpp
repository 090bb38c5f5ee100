#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldnav {

enum class ErrorCode {
  InvalidArgument,
  OutOfBounds,
  SeedOccupied,
  GoalOccupied,
  StartOccupied,
  NoConvergence,
  Stalled,
  MaxStepsExceeded,
  NoPathExists,
  NoPathFound,
  SensorInsideObstacle,
  ParamsInfeasible,
  SamplingExhausted,
  DimMismatch,
  ZeroTruthNorm,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; callers that batch work record the code and move on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fieldnav
