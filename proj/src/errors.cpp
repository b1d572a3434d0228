#include "finsler/types.hpp"

namespace finsler {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroDirection: return "ZeroDirection";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::StencilUnstable: return "StencilUnstable";
    case ErrorCode::InvalidN: return "InvalidN";
    case ErrorCode::SourceOutsideDomain: return "SourceOutsideDomain";
    case ErrorCode::TouchesBoundary: return "TouchesBoundary";
    case ErrorCode::WindowOutsideDomain: return "WindowOutsideDomain";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyInterior: return "EmptyInterior";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::InfeasibleMarginals: return "InfeasibleMarginals";
    case ErrorCode::SingularPart: return "SingularPart";
    case ErrorCode::PathNotFound: return "PathNotFound";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace finsler
