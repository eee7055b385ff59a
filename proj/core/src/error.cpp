#include "flashguard/error.hpp"

namespace flashguard {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dimension_too_small: return "dimension_too_small";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::empty_target_region: return "empty_target_region";
    case Errc::degenerate_variance: return "degenerate_variance";
    case Errc::no_component_retained: return "no_component_retained";
    case Errc::single_class: return "single_class";
    case Errc::separation: return "separation";
    case Errc::not_converged: return "not_converged";
    case Errc::total_conflict: return "total_conflict";
    case Errc::empty_outcome_class: return "empty_outcome_class";
    case Errc::provider_unavailable: return "provider_unavailable";
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::insufficient_feedback: return "insufficient_feedback";
    case Errc::not_found: return "not_found";
    case Errc::conflict: return "conflict";
  }
  return "unknown";
}

}  // namespace flashguard
