#include "flashguard/skinmodel.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "flashguard/error.hpp"
#include "flashguard/stats.hpp"

namespace flashguard {

void Standardization::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!std::isfinite(mean[i]) || !(stdev[i] > 0.0) || !std::isfinite(stdev[i])) {
      throw Error(Errc::invalid_argument, "standardization needs finite means and stdev > 0");
    }
  }
}

Vector3 Standardization::z_scores(const SkinProportionVector& sp) const {
  return {(sp.sp1 - mean[0]) / stdev[0], (sp.sp2 - mean[1]) / stdev[1],
          (sp.sp3 - mean[2]) / stdev[2]};
}

void SkcModel::validate() const {
  if (standardization) standardization->validate();
  if (loadings[0] == 0.0 && loadings[1] == 0.0 && loadings[2] == 0.0) {
    throw Error(Errc::invalid_argument, "SKC loadings are all zero");
  }
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error(Errc::invalid_argument, "logistic coefficients must be finite");
  }
  if (beta_se < 0.0) throw Error(Errc::invalid_argument, "beta_se must be >= 0");
}

SkcModel SkcModel::published() {
  SkcModel m;
  m.loadings = {0.362, 0.384, 0.349};
  m.alpha = -0.775;
  m.beta = 1.114;
  // Implied by Wald = 43.108 = (1.114 / se)^2.
  m.beta_se = 1.114 / std::sqrt(43.108);
  return m;
}

namespace {

void require_rows(std::span<const SkinProportionVector> rows) {
  if (rows.size() < 3) {
    throw Error(Errc::empty_input, "at least three SP rows are required");
  }
}

std::array<std::vector<double>, 3> columns(std::span<const SkinProportionVector> rows) {
  std::array<std::vector<double>, 3> cols;
  for (auto& c : cols) c.reserve(rows.size());
  for (const auto& r : rows) {
    cols[0].push_back(r.sp1);
    cols[1].push_back(r.sp2);
    cols[2].push_back(r.sp3);
  }
  return cols;
}

}  // namespace

Matrix3 correlations(std::span<const SkinProportionVector> rows) {
  require_rows(rows);
  const auto cols = columns(rows);
  Vector3 means{};
  for (std::size_t i = 0; i < 3; ++i) means[i] = stats::mean(cols[i]);
  Matrix3 cov{};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        s += (cols[i][k] - means[i]) * (cols[j][k] - means[j]);
      }
      cov[i][j] = cov[j][i] = s;
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(cov[i][i] > 0.0)) {
      throw Error(Errc::degenerate_variance,
                  "SP column " + std::to_string(i + 1) + " has zero variance");
    }
  }
  Matrix3 corr{};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      corr[i][j] = i == j ? 1.0 : cov[i][j] / std::sqrt(cov[i][i] * cov[j][j]);
    }
  }
  return corr;
}

PcaResult pca_from_correlation(const Matrix3& corr) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = corr[i][j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::invalid_argument, "eigen-decomposition failed");
  }
  PcaResult out;
  // Eigen sorts ascending.
  for (int k = 0; k < 3; ++k) {
    const int src = 2 - k;
    out.eigenvalues[k] = solver.eigenvalues()(src);
    Vector3 v{solver.eigenvectors()(0, src), solver.eigenvectors()(1, src),
              solver.eigenvectors()(2, src)};
    if (v[0] + v[1] + v[2] < 0.0) {
      for (auto& x : v) x = -x;
    }
    out.eigenvectors[k] = v;
  }
  constexpr double kKaiserSlack = 1e-9;
  out.retained = static_cast<std::size_t>(std::count_if(
      out.eigenvalues.begin(), out.eigenvalues.end(),
      [](double ev) { return ev > 1.0 + kKaiserSlack; }));
  if (out.retained == 0) {
    throw Error(Errc::no_component_retained, "no eigenvalue exceeds 1 (Kaiser criterion)");
  }
  if (out.multiple_retained()) {
    spdlog::warn("Kaiser criterion retains {} components; using the leading one",
                 out.retained);
  }
  const double scale = 1.0 / std::sqrt(out.eigenvalues[0]);
  for (std::size_t i = 0; i < 3; ++i) out.loadings[i] = out.eigenvectors[0][i] * scale;
  return out;
}

Standardization standardization_of(std::span<const SkinProportionVector> rows) {
  if (rows.size() < 2) throw Error(Errc::empty_input, "standardization needs two rows");
  const auto cols = columns(rows);
  Standardization out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.mean[i] = stats::mean(cols[i]);
    out.stdev[i] = stats::sample_stdev(cols[i]);
    if (!(out.stdev[i] > 0.0)) {
      throw Error(Errc::degenerate_variance,
                  "SP column " + std::to_string(i + 1) + " has zero variance");
    }
  }
  return out;
}

PcaResult fit_pca(std::span<const SkinProportionVector> rows) {
  const auto corr = correlations(rows);
  auto result = pca_from_correlation(corr);
  result.standardization = standardization_of(rows);
  return result;
}

double skc_from_z(const Vector3& z, const Vector3& loadings) noexcept {
  return loadings[0] * z[0] + loadings[1] * z[1] + loadings[2] * z[2];
}

double skc(const SkinProportionVector& sp, const SkcModel& model) {
  if (!model.standardization) {
    throw Error(Errc::invalid_argument,
                "SKC model has no SP standardization; calibrate it on a corpus first");
  }
  return skc_from_z(model.standardization->z_scores(sp), model.loadings);
}

double misbehaving_probability(double skc_value, const SkcModel& model) noexcept {
  return stats::sigmoid(model.alpha + model.beta * skc_value);
}

namespace {

void check_logistic_input(std::span<const double> x, std::span<const std::uint8_t> labels) {
  if (x.size() != labels.size()) {
    throw Error(Errc::invalid_argument, "predictor and label counts differ");
  }
}

}  // namespace

double logistic_log_likelihood(std::span<const double> x,
                               std::span<const std::uint8_t> labels,
                               double alpha, double beta) {
  check_logistic_input(x, labels);
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = alpha + beta * x[i];
    // log(1 + e^eta) without overflow.
    const double log1pexp = eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    ll += (labels[i] ? eta : 0.0) - log1pexp;
  }
  return ll;
}

std::array<double, 2> logistic_gradient(std::span<const double> x,
                                        std::span<const std::uint8_t> labels,
                                        double alpha, double beta) {
  check_logistic_input(x, labels);
  std::array<double, 2> g{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (labels[i] ? 1.0 : 0.0) - stats::sigmoid(alpha + beta * x[i]);
    g[0] += r;
    g[1] += r * x[i];
  }
  return g;
}

LogisticFit fit_logistic(std::span<const double> x,
                         std::span<const std::uint8_t> labels,
                         const LogisticOptions& options) {
  check_logistic_input(x, labels);
  const auto positives = std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw Error(Errc::single_class, "logistic fit needs both classes");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw Error(Errc::degenerate_variance, "predictor is constant");

  double max0 = -INFINITY, min0 = INFINITY, max1 = -INFINITY, min1 = INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (labels[i]) {
      max1 = std::max(max1, x[i]);
      min1 = std::min(min1, x[i]);
    } else {
      max0 = std::max(max0, x[i]);
      min0 = std::min(min0, x[i]);
    }
  }
  if (max0 <= min1 || max1 <= min0) {
    throw Error(Errc::separation, "classes are separable by the predictor; MLE diverges");
  }

  LogisticFit fit;
  double a = 0.0;
  double b = 0.0;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;
  const auto information = [&](double alpha, double beta) {
    h00 = h01 = h11 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = stats::sigmoid(alpha + beta * x[i]);
      const double w = p * (1.0 - p);
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double scale = std::max({h00, h11, 1.0});
    if (std::abs(h00 * h11 - h01 * h01) < 1e-12 * scale * scale) {
      h00 += options.ridge;
      h11 += options.ridge;
    }
  };

  for (fit.iterations = 1; fit.iterations <= options.max_iterations; ++fit.iterations) {
    const auto g = logistic_gradient(x, labels, a, b);
    information(a, b);
    const double det = h00 * h11 - h01 * h01;
    const double da = (h11 * g[0] - h01 * g[1]) / det;
    const double db = (h00 * g[1] - h01 * g[0]) / det;
    a += da;
    b += db;
    if (!std::isfinite(a) || !std::isfinite(b) || std::abs(b) > options.separation_limit) {
      throw Error(Errc::separation, "logistic coefficients diverge");
    }
    if (std::max(std::abs(da), std::abs(db)) < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, options.max_iterations);
  information(a, b);
  const double det = h00 * h11 - h01 * h01;
  fit.alpha = a;
  fit.beta = b;
  fit.alpha_se = std::sqrt(h11 / det);
  fit.beta_se = std::sqrt(h00 / det);
  fit.log_likelihood = logistic_log_likelihood(x, labels, a, b);
  if (!fit.converged) {
    spdlog::warn("logistic fit stopped after {} iterations without converging",
                 options.max_iterations);
  }
  return fit;
}

GoodnessOfFit hosmer_lemeshow(std::span<const double> probs,
                              std::span<const std::uint8_t> labels, int groups) {
  if (probs.size() != labels.size()) {
    throw Error(Errc::invalid_argument, "probability and label counts differ");
  }
  if (groups < 3) throw Error(Errc::invalid_argument, "Hosmer-Lemeshow needs >= 3 groups");
  const std::size_t n = probs.size();
  if (n < static_cast<std::size_t>(groups)) {
    throw Error(Errc::empty_input, "fewer observations than groups leaves a group empty");
  }
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) {
      throw Error(Errc::invalid_argument, "probabilities must lie in (0, 1)");
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return probs[l] < probs[r]; });

  GoodnessOfFit out;
  const auto g = static_cast<std::size_t>(groups);
  for (std::size_t k = 0; k < g; ++k) {
    const std::size_t begin = k * n / g;
    const std::size_t end = (k + 1) * n / g;
    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      observed += labels[order[i]] ? 1.0 : 0.0;
      expected += probs[order[i]];
    }
    const double size = static_cast<double>(end - begin);
    const double observed0 = size - observed;
    const double expected0 = size - expected;
    out.chi_square += (observed - expected) * (observed - expected) / expected +
                      (observed0 - expected0) * (observed0 - expected0) / expected0;
  }
  out.df = groups - 2;
  out.p_value = stats::chi_square_upper_tail(out.chi_square, out.df);
  return out;
}

double wald(double beta, double beta_se) {
  if (!(beta_se > 0.0)) throw Error(Errc::invalid_argument, "Wald test needs se > 0");
  const double ratio = beta / beta_se;
  return ratio * ratio;
}

double wald_p_value(double statistic) {
  return stats::chi_square_upper_tail(statistic, 1.0);
}

}  // namespace flashguard
