#include "wsl/error.hpp"

namespace wsl {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonSPD: return "NonSPD";
    case ErrorCode::AlphaRange: return "AlphaRange";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::InvalidSupport: return "InvalidSupport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::OneClassMissing: return "OneClassMissing";
    case ErrorCode::CombinatorialBudgetExceeded: return "CombinatorialBudgetExceeded";
    case ErrorCode::ExpectationOutOfRange: return "ExpectationOutOfRange";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NoAnalyticExpectation: return "NoAnalyticExpectation";
    case ErrorCode::UnsupportedQueryKind: return "UnsupportedQueryKind";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace wsl
