#include "nh/error.hpp"

namespace nh {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingField: return "NH_E_MISSING_FIELD";
    case ErrorCode::InvariantViolation: return "NH_E_INVARIANT_VIOLATION";
    case ErrorCode::DimensionMismatch: return "NH_E_DIMENSION_MISMATCH";
    case ErrorCode::InvalidPermutation: return "NH_E_INVALID_PERMUTATION";
    case ErrorCode::GroupTooLarge: return "NH_E_GROUP_TOO_LARGE";
    case ErrorCode::NonOrthogonalTable: return "NH_E_NON_ORTHOGONAL_TABLE";
    case ErrorCode::EquivarianceViolation: return "NH_E_EQUIVARIANCE_VIOLATION";
    case ErrorCode::MultipleEigenvaluesOnBlock: return "NH_E_MULTIPLE_EIGENVALUES_ON_BLOCK";
    case ErrorCode::SingularPoint: return "NH_E_SINGULAR_POINT";
    case ErrorCode::DegenerateCrossing: return "NH_E_DEGENERATE_CROSSING";
    case ErrorCode::NoCriticalPointsInRange: return "NH_E_NO_CRITICAL_POINTS_IN_RANGE";
    case ErrorCode::HistoryUnderrun: return "NH_E_HISTORY_UNDERRUN";
    case ErrorCode::Divergence: return "NH_E_DIVERGENCE";
    case ErrorCode::EmptyWindow: return "NH_E_EMPTY_WINDOW";
    case ErrorCode::TooFewSamples: return "NH_E_TOO_FEW_SAMPLES";
    case ErrorCode::Parse: return "NH_E_PARSE";
    case ErrorCode::Io: return "NH_E_IO";
    case ErrorCode::Usage: return "NH_E_USAGE";
  }
  return "NH_E_UNKNOWN";
}

}  // namespace nh
