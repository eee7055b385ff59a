#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flashguard {

// Frame of discernment {H_N (normal), H_F (misbehaving)}. Mass on the empty
// set is identically zero and not stored.

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kConflictLimit = 1e-12;
inline constexpr double kProbabilityClamp = 1e-6;

struct MassFunction {
  double m_n = 0.0;
  double m_f = 0.0;
  double m_theta = 1.0;

  static MassFunction vacuous() noexcept { return {0.0, 0.0, 1.0}; }
  bool valid() const noexcept;
  /// Throws Errc::invalid_argument when !valid().
  void validate() const;
};

struct BeliefPair {
  double bel_n = 0.0;
  double bel_f = 0.0;
};

/// Detector evidence: present -> rel_present on {H_N}, else rel_absent on
/// {H_N}; the remainder goes to the whole frame. Reliabilities are clamped to
/// [1e-6, 1 - 1e-6].
MassFunction mass_from_binary(bool present, double rel_present, double rel_absent);

/// Skin evidence: (1 - p_f) on {H_N}, p_f on {H_F}, with p_f clamped.
MassFunction mass_from_probability(double p_f);

/// Conflict K = sum of products over disjoint focal pairs.
double conflict(const MassFunction& a, const MassFunction& b) noexcept;

/// Dempster's rule. Throws Errc::total_conflict when K >= 1 - 1e-12.
MassFunction combine(const MassFunction& a, const MassFunction& b);

BeliefPair belief(const MassFunction& m) noexcept;

struct BinaryEvidence {
  bool present = false;
  double rel_present = 0.0;
  double rel_absent = 0.0;
};

struct FrameFusion {
  MassFunction mass;
  BeliefPair belief;
};

/// Left fold of combine over the detector masses and then the skin mass.
FrameFusion fuse_frame(std::span<const BinaryEvidence> evidences,
                       const std::optional<MassFunction>& skin_mass);

enum class Decision { normal, misbehaving, dark_webcam };

std::string to_string(Decision d);
Decision decision_from_string(const std::string& s);

struct FusedDecision {
  std::vector<BeliefPair> per_frame;
  std::size_t chosen_frame = 0;
  BeliefPair fused;
  MassFunction fused_mass;
  Decision decision = Decision::normal;
};

/// Maximum-belief rule: keep the frame with the largest bel_n (earliest on
/// ties); misbehaving iff its bel_f >= theta.
FusedDecision decide_user(std::span<const FrameFusion> frames, double theta = 0.5);

}  // namespace flashguard
