#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsl {

enum class ErrorCode {
  NonSPD,
  AlphaRange,
  DimMismatch,
  EmptySupport,
  InvalidSupport,
  InvalidArgument,
  TooFewSamples,
  OneClassMissing,
  CombinatorialBudgetExceeded,
  ExpectationOutOfRange,
  BudgetExceeded,
  NoAnalyticExpectation,
  UnsupportedQueryKind,
  NonPositiveDiagonal,
  Config,
};

std::string_view to_string(ErrorCode code) noexcept;

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wsl
