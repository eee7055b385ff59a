#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flashguard {

enum class Errc {
  invalid_argument,
  dimension_too_small,
  dimension_mismatch,
  empty_input,
  empty_target_region,
  degenerate_variance,
  no_component_retained,
  single_class,
  separation,
  not_converged,
  total_conflict,
  empty_outcome_class,
  provider_unavailable,
  io,
  parse,
  insufficient_feedback,
  not_found,
  conflict,
};

std::string_view to_string(Errc code) noexcept;

/// Exception carrying a machine-readable code. All library failures throw this.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace flashguard
