#include "flashguard/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include "flashguard/error.hpp"

namespace flashguard {

std::vector<double> theta_grid(int steps) {
  if (steps < 1) throw Error(Errc::invalid_argument, "theta grid needs at least one step");
  std::vector<double> out;
  for (int k = 0; k <= steps; ++k) out.push_back(static_cast<double>(k) / steps);
  return out;
}

namespace {

double ratio_or_one(double num, double den) { return den > 0.0 ? num / den : 1.0; }

}  // namespace

PrCurve pr_curve(std::span<const ScoredUser> users, std::span<const double> thetas) {
  if (users.empty()) throw Error(Errc::empty_input, "no users to evaluate");
  for (std::size_t i = 1; i < thetas.size(); ++i) {
    if (!(thetas[i] > thetas[i - 1])) {
      throw Error(Errc::invalid_argument, "thetas must strictly increase");
    }
  }
  PrCurve curve;
  for (double theta : thetas) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& u : users) {
      const bool flagged = u.score >= theta;
      if (flagged && u.misbehaving) ++tp;
      else if (flagged) ++fp;
      else if (u.misbehaving) ++fn;
      else ++tn;
    }
    curve.misbehaving.push_back({theta, ratio_or_one(tp, tp + fp), ratio_or_one(tp, tp + fn)});
    curve.normal.push_back({theta, ratio_or_one(tn, tn + fn), ratio_or_one(tn, tn + fp)});
  }
  return curve;
}

std::vector<PrPoint> ranked_pr(std::span<const ScoredUser> users) {
  if (users.empty()) throw Error(Errc::empty_input, "no users to rank");
  std::vector<ScoredUser> sorted(users.begin(), users.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredUser& a, const ScoredUser& b) { return a.score > b.score; });
  const auto positives = static_cast<double>(std::count_if(
      sorted.begin(), sorted.end(), [](const ScoredUser& u) { return u.misbehaving; }));
  std::vector<PrPoint> out;
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    (sorted[i].misbehaving ? tp : fp) += 1;
    // Users sharing a score are flagged together.
    if (i + 1 < sorted.size() && sorted[i + 1].score == sorted[i].score) continue;
    out.push_back({sorted[i].score, tp / (tp + fp), ratio_or_one(tp, positives)});
  }
  return out;
}

double interpolated_precision(std::span<const PrPoint> points, double recall) {
  double best = 0.0;
  for (const auto& p : points) {
    if (p.recall >= recall) best = std::max(best, p.precision);
  }
  return best;
}

std::string pr_csv(const PrCurve& curve) {
  std::string out = "class,theta,precision,recall\n";
  char buf[128];
  const auto emit = [&](const char* cls, const std::vector<PrPoint>& pts) {
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof buf, "%s,%.6g,%.6f,%.6f\n", cls, p.theta, p.precision, p.recall);
      out += buf;
    }
  };
  emit("misbehaving", curve.misbehaving);
  emit("normal", curve.normal);
  return out;
}

EvaluationResult evaluate(const Dataset& dataset, const ModelBundle& bundle,
                          std::span<const double> thetas, unsigned threads) {
  if (dataset.users.empty()) throw Error(Errc::empty_input, "evaluation dataset is empty");
  EvaluationResult out;
  out.verdicts = classify_dataset(dataset, bundle, threads);
  for (std::size_t i = 0; i < out.verdicts.size(); ++i) {
    const auto& v = out.verdicts[i];
    if (v.decision == Decision::dark_webcam) {
      ++out.dark_users;
      continue;
    }
    const bool bad = dataset.users[i].label.misbehaving();
    out.fused_scores.push_back({v.fused.bel_f, bad});
    out.skin_scores.push_back({v.skin_probability, bad});
  }
  out.curve = pr_curve(out.fused_scores, thetas);
  return out;
}

}  // namespace flashguard
