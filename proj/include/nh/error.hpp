#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nh {

enum class ErrorCode {
  MissingField,
  InvariantViolation,
  DimensionMismatch,
  InvalidPermutation,
  GroupTooLarge,
  NonOrthogonalTable,
  EquivarianceViolation,
  MultipleEigenvaluesOnBlock,
  SingularPoint,
  DegenerateCrossing,
  NoCriticalPointsInRange,
  HistoryUnderrun,
  Divergence,
  EmptyWindow,
  TooFewSamples,
  Parse,
  Io,
  Usage,
};

// Stable machine-readable name, e.g. "NH_E_INVARIANT_VIOLATION".
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nh
