#include "bmapinf/error.hpp"

namespace bmapinf {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NonGenerator: return "NonGenerator";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::NoArrivals: return "NoArrivals";
    case ErrorCode::BadPmf: return "BadPmf";
    case ErrorCode::NotSingleRate: return "NotSingleRate";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::CapTooSmall: return "CapTooSmall";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotStable: return "NotStable";
    case ErrorCode::DivergentDrift: return "DivergentDrift";
    case ErrorCode::NoSuchK: return "NoSuchK";
    case ErrorCode::CertificateFailed: return "CertificateFailed";
    case ErrorCode::HorizonNonpositive: return "HorizonNonpositive";
    case ErrorCode::CustomerBudgetExceeded: return "CustomerBudgetExceeded";
    case ErrorCode::OrderingViolated: return "OrderingViolated";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotStable:
    case ErrorCode::DivergentDrift:
      return ErrorCategory::Verdict;
    case ErrorCode::SolveFailed:
    case ErrorCode::NumericalFailure:
    case ErrorCode::CertificateFailed:
    case ErrorCode::OrderingViolated:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Input;
  }
}

}  // namespace bmapinf
