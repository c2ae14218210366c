#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kerrgyro {

enum class errc {
  invalid_argument,
  empty_vector,
  norm_exceeded,
  tail_violation,
  basis_mismatch,
  dimension_mismatch,
  flat_response,
  truncation_dominated,
  singular_fisher,
  out_of_regime,
  undefined_formula,
  infeasible_budget,
  non_finite,
  io_error,
  config_error,
};

/// Stable short name, used as the reason code in sweep output.
constexpr std::string_view to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::empty_vector: return "empty_vector";
    case errc::norm_exceeded: return "norm_exceeded";
    case errc::tail_violation: return "tail_violation";
    case errc::basis_mismatch: return "basis_mismatch";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::flat_response: return "flat_response";
    case errc::truncation_dominated: return "truncation_dominated";
    case errc::singular_fisher: return "singular_fisher";
    case errc::out_of_regime: return "out_of_regime";
    case errc::undefined_formula: return "undefined_formula";
    case errc::infeasible_budget: return "infeasible_budget";
    case errc::non_finite: return "non_finite";
    case errc::io_error: return "io_error";
    case errc::config_error: return "config_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace kerrgyro
