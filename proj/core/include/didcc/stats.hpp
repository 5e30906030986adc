#pragma once

#include <span>

namespace didcc {

double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);
/// P(chi2_1 > x) = erfc(sqrt(x / 2)); 1 for x <= 0.
double chi2_1_survival(double x);

double mean(std::span<const double> v);
/// Sample standard deviation with divisor m - 1 (0 for fewer than two values).
double sample_sd(std::span<const double> v);
/// Median of a copy of v.
double median(std::span<const double> v);

}  // namespace didcc
