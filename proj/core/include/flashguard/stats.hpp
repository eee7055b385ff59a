#pragma once

#include <span>

namespace flashguard::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator).
double sample_stdev(std::span<const double> xs);

/// Numerically stable logistic function.
double sigmoid(double z) noexcept;

/// Regularised upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

/// P(X >= x) for X ~ chi-square with df degrees of freedom.
double chi_square_upper_tail(double x, double df);

}  // namespace flashguard::stats
