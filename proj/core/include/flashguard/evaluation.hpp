#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/dataset.hpp"
#include "flashguard/pipeline.hpp"

namespace flashguard {

struct PrPoint {
  double theta = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

/// Precision-recall per class over a threshold sweep on bel_f: a user is
/// flagged misbehaving when bel_f >= theta and normal otherwise. Precision
/// with no predictions and recall with no positives are reported as 1.
struct PrCurve {
  std::vector<PrPoint> misbehaving;
  std::vector<PrPoint> normal;
};

struct ScoredUser {
  double score = 0.0;  // belief (or probability) of misbehaving
  bool misbehaving = false;
};

/// k / steps for k = 0..steps.
std::vector<double> theta_grid(int steps);

/// Throws Errc::empty_input without users and Errc::invalid_argument unless
/// thetas strictly increase.
PrCurve pr_curve(std::span<const ScoredUser> users, std::span<const double> thetas);

/// Misbehaving-class PR at every distinct score, highest threshold first.
std::vector<PrPoint> ranked_pr(std::span<const ScoredUser> users);

/// Best precision among points whose recall reaches `recall`; 0 if none does.
double interpolated_precision(std::span<const PrPoint> points, double recall);

std::string pr_csv(const PrCurve& curve);

struct EvaluationResult {
  PrCurve curve;
  std::vector<Verdict> verdicts;
  std::vector<ScoredUser> fused_scores;  // bel_f per non-dark user
  std::vector<ScoredUser> skin_scores;   // skin probability per non-dark user
  std::size_t dark_users = 0;
};

/// Classifies every user; dark users are excluded from the curves.
EvaluationResult evaluate(const Dataset& dataset, const ModelBundle& bundle,
                          std::span<const double> thetas, unsigned threads = 0);

}  // namespace flashguard
