#include "flashguard/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "flashguard/error.hpp"

namespace flashguard {

bool MassFunction::valid() const noexcept {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in_unit(m_n) && in_unit(m_f) && in_unit(m_theta) &&
         std::abs(m_n + m_f + m_theta - 1.0) <= kMassTolerance;
}

void MassFunction::validate() const {
  if (!valid()) {
    throw Error(Errc::invalid_argument, "mass function must be non-negative and sum to 1");
  }
}

namespace {

double clamp_probability(double p) {
  if (std::isnan(p)) throw Error(Errc::invalid_argument, "probability is NaN");
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

}  // namespace

MassFunction mass_from_binary(bool present, double rel_present, double rel_absent) {
  const double rel = clamp_probability(present ? rel_present : rel_absent);
  return {rel, 0.0, 1.0 - rel};
}

MassFunction mass_from_probability(double p_f) {
  const double p = clamp_probability(p_f);
  return {1.0 - p, p, 0.0};
}

double conflict(const MassFunction& a, const MassFunction& b) noexcept {
  return a.m_n * b.m_f + a.m_f * b.m_n;
}

MassFunction combine(const MassFunction& a, const MassFunction& b) {
  const double k = conflict(a, b);
  if (k >= 1.0 - kConflictLimit) {
    throw Error(Errc::total_conflict, "evidence is in total conflict");
  }
  const double norm = 1.0 - k;
  MassFunction out;
  out.m_n = (a.m_n * b.m_n + a.m_n * b.m_theta + a.m_theta * b.m_n) / norm;
  out.m_f = (a.m_f * b.m_f + a.m_f * b.m_theta + a.m_theta * b.m_f) / norm;
  out.m_theta = a.m_theta * b.m_theta / norm;
  return out;
}

BeliefPair belief(const MassFunction& m) noexcept {
  // Singleton hypotheses: only the singleton's own mass is a subset.
  return {m.m_n, m.m_f};
}

FrameFusion fuse_frame(std::span<const BinaryEvidence> evidences,
                       const std::optional<MassFunction>& skin_mass) {
  if (evidences.empty() && !skin_mass) {
    throw Error(Errc::empty_input, "frame fusion needs at least one mass");
  }
  MassFunction acc = MassFunction::vacuous();
  for (const auto& e : evidences) {
    acc = combine(acc, mass_from_binary(e.present, e.rel_present, e.rel_absent));
  }
  if (skin_mass) acc = combine(acc, *skin_mass);
  return {acc, belief(acc)};
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::normal: return "normal";
    case Decision::misbehaving: return "misbehaving";
    case Decision::dark_webcam: return "dark_webcam";
  }
  return "normal";
}

Decision decision_from_string(const std::string& s) {
  if (s == "normal") return Decision::normal;
  if (s == "misbehaving") return Decision::misbehaving;
  if (s == "dark_webcam") return Decision::dark_webcam;
  throw Error(Errc::parse, "unknown decision '" + s + "'");
}

FusedDecision decide_user(std::span<const FrameFusion> frames, double theta) {
  if (frames.empty()) throw Error(Errc::empty_input, "no per-frame beliefs to decide on");
  FusedDecision out;
  out.per_frame.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.per_frame.push_back(frames[i].belief);
    if (frames[i].belief.bel_n > frames[out.chosen_frame].belief.bel_n) out.chosen_frame = i;
  }
  out.fused = frames[out.chosen_frame].belief;
  out.fused_mass = frames[out.chosen_frame].mass;
  out.decision = out.fused.bel_f >= theta ? Decision::misbehaving : Decision::normal;
  return out;
}

}  // namespace flashguard
