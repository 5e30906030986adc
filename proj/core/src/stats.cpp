#include "didcc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "didcc/error.hpp"

namespace didcc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal quantile needs p in (0, 1)");
  // Bracket then polish with Newton steps on the cdf.
  double lo = -40.0;
  double hi = 40.0;
  double x = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double f = normal_cdf(x) - p;
    if (f > 0.0) hi = x; else lo = x;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    double next = pdf > 0.0 ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

double chi2_1_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  return std::erfc(std::sqrt(0.5 * x));
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> c(v.begin(), v.end());
  std::sort(c.begin(), c.end());
  const std::size_t m = c.size() / 2;
  return c.size() % 2 == 1 ? c[m] : 0.5 * (c[m - 1] + c[m]);
}

}  // namespace didcc
