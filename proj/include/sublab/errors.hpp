#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sublab {

enum class ErrorCode {
  InvalidSpec,
  BracketGradingViolation,
  AntisymmetryViolation,
  JacobiViolation,
  FirstLayerNotGenerating,
  StepTooLarge,
  DimensionMismatch,
  NegativeLambdaOutsideFirstLayer,
  BaseMismatch,
  AlphaBoundViolation,
  AsymmetricVertexSet,
  DegenerateSpan,
  TOutOfRange,
  EndpointMismatch,
  NotConvexMetric,
  NotContinuousMetric,
  NoFeasibleCurve,
  OracleFailure,
  IncompatibleValues,
  GradientUnavailable,
  UnknownBuiltin,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sublab
