#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "flashguard/skin.hpp"

namespace flashguard {

using Matrix3 = std::array<std::array<double, 3>, 3>;
using Vector3 = std::array<double, 3>;

/// Training-set mean and sample standard deviation of each palette's SP.
struct Standardization {
  Vector3 mean{};
  Vector3 stdev{};

  void validate() const;
  Vector3 z_scores(const SkinProportionVector& sp) const;
};

/// Column means and sample stdevs; throws Errc::degenerate_variance for a
/// constant column and Errc::empty_input below two rows.
Standardization standardization_of(std::span<const SkinProportionVector> rows);

/// Skin-exposure component plus the logistic link on top of it.
struct SkcModel {
  std::optional<Standardization> standardization;
  Vector3 loadings{};
  double alpha = 0.0;
  double beta = 0.0;
  double beta_se = 0.0;

  void validate() const;

  /// Published loadings (0.362, 0.384, 0.349) and log-odds -0.775 + 1.114 SKC.
  /// The standardization is unpublished and left empty.
  static SkcModel published();
};

/// Pearson correlation matrix of the three SP columns.
Matrix3 correlations(std::span<const SkinProportionVector> rows);

struct PcaResult {
  Vector3 eigenvalues{};               // descending
  std::array<Vector3, 3> eigenvectors{};  // eigenvectors[k] pairs with eigenvalues[k]
  std::size_t retained = 0;            // Kaiser: eigenvalue > 1
  Vector3 loadings{};                  // score coefficients of the leading component
  Standardization standardization;     // empty when built from a matrix

  bool multiple_retained() const noexcept { return retained > 1; }
};

/// PCA of a correlation matrix. Score coefficients are eigenvector /
/// sqrt(eigenvalue) with the sign chosen so they sum positive. Throws
/// Errc::no_component_retained if no eigenvalue exceeds 1.
PcaResult pca_from_correlation(const Matrix3& corr);

/// Standardise the rows, then pca_from_correlation on their correlations.
PcaResult fit_pca(std::span<const SkinProportionVector> rows);

double skc_from_z(const Vector3& z, const Vector3& loadings) noexcept;
/// Throws Errc::invalid_argument when the model has no standardization.
double skc(const SkinProportionVector& sp, const SkcModel& model);

double misbehaving_probability(double skc_value, const SkcModel& model) noexcept;

struct LogisticOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double separation_limit = 50.0;
  double ridge = 1e-8;
};

struct LogisticFit {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_se = 0.0;
  double beta_se = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Bernoulli log-likelihood of labels (1 = misbehaving) under
/// logit p = alpha + beta * x.
double logistic_log_likelihood(std::span<const double> x,
                               std::span<const std::uint8_t> labels,
                               double alpha, double beta);
/// Gradient of logistic_log_likelihood with respect to (alpha, beta).
std::array<double, 2> logistic_gradient(std::span<const double> x,
                                        std::span<const std::uint8_t> labels,
                                        double alpha, double beta);

/// Maximum likelihood by iteratively reweighted least squares.
/// Errors: Errc::single_class, Errc::degenerate_variance (constant x),
/// Errc::separation (separable data or |beta| past the limit).
LogisticFit fit_logistic(std::span<const double> x,
                         std::span<const std::uint8_t> labels,
                         const LogisticOptions& options = {});

struct GoodnessOfFit {
  double chi_square = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::optional<double> wald;
};

/// Hosmer-Lemeshow test over equal-count groups of ascending predicted risk
/// (ties ordered by input position); df = groups - 2.
GoodnessOfFit hosmer_lemeshow(std::span<const double> probs,
                              std::span<const std::uint8_t> labels,
                              int groups = 10);

/// (beta / se)^2, one degree of freedom.
double wald(double beta, double beta_se);
double wald_p_value(double statistic);

}  // namespace flashguard
