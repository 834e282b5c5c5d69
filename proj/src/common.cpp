#include "layoutforge/common.hpp"

namespace layoutforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::DanglingId: return "dangling id";
    case ErrorCode::MissingFeature: return "missing feature";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NoFloor: return "no floor";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NotUpright: return "not upright";
    case ErrorCode::MissingOracle: return "missing oracle";
    case ErrorCode::EmptyCategory: return "empty category";
    case ErrorCode::FineSelectionFailed: return "fine selection failed";
    case ErrorCode::NoSubspace: return "no subspace";
    case ErrorCode::NonPositiveExtent: return "non-positive extent";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::StageDependency: return "stage dependency";
  }
  return "unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Parse:
    case ErrorCode::Validation:
    case ErrorCode::DanglingId:
    case ErrorCode::MissingFeature:
    case ErrorCode::DimensionMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace layoutforge
