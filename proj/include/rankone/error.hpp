#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankone {

enum class ErrorCode {
  non_positive_cut,
  negative_spacer,
  malformed_rule,
  bounds_violated,
  unrealized_stochastic,
  unknown_name,
  depth_over_budget,
  window_too_long,
  lag_out_of_range,
  missing_lag,
  missing_basis_lag,
  unknown_family,
  solver_divergence,
  segment_budget_exceeded,
  time_out_of_range,
  no_convergence,
  invalid_argument,
  parse_error,
  validation_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` identifies the failure
/// class so the C API and the CLI can map it onto status/exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(to_string(code)) + ": " + message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace rankone
