#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmapinf {

// Stable machine-readable error codes. The CLI prints code_name() verbatim,
// so existing names must not be renamed.
enum class ErrorCode {
  InvalidInput,
  NonGenerator,
  Reducible,
  NoArrivals,
  BadPmf,
  NotSingleRate,
  SolveFailed,
  CapTooSmall,
  NumericalFailure,
  NotStable,
  DivergentDrift,
  NoSuchK,
  CertificateFailed,
  HorizonNonpositive,
  CustomerBudgetExceeded,
  OrderingViolated,
};

std::string_view code_name(ErrorCode code) noexcept;

enum class ErrorCategory { Input, Verdict, Internal };

ErrorCategory category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bmapinf
