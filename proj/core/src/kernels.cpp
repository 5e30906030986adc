#include "didcc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "didcc/error.hpp"

namespace didcc {

std::string_view kernel_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Triangular: return "triangular";
    case KernelFamily::Biweight: return "biweight";
    case KernelFamily::Triweight: return "triweight";
  }
  return "unknown";
}

KernelFamily parse_kernel(std::string_view name) {
  for (auto f : {KernelFamily::Epanechnikov, KernelFamily::Triangular, KernelFamily::Biweight,
                 KernelFamily::Triweight}) {
    if (kernel_name(f) == name) return f;
  }
  throw ParameterError("unknown kernel family '" + std::string(name) + "'");
}

double univariate_kernel(KernelFamily family, double u) {
  const double a = std::abs(u);
  if (a > 1.0) return 0.0;
  const double s = 1.0 - u * u;
  switch (family) {
    case KernelFamily::Epanechnikov: return 0.75 * s;
    case KernelFamily::Triangular: return 1.0 - a;
    case KernelFamily::Biweight: return 0.9375 * s * s;
    case KernelFamily::Triweight: return 1.09375 * s * s * s;
  }
  return 0.0;
}

double ContinuousKernel::operator()(std::span<const double> u) const {
  if (u.size() != dimension_) throw ShapeError("kernel argument has the wrong dimension");
  double k = 1.0;
  for (double ui : u) {
    k *= univariate_kernel(family_, ui);
    if (k == 0.0) return 0.0;
  }
  return k;
}

double ContinuousKernel::scaled(std::span<const double> u, double h) const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("bandwidth must be positive and finite");
  if (u.size() != dimension_) throw ShapeError("kernel argument has the wrong dimension");
  double k = 1.0;
  for (double ui : u) {
    k *= univariate_kernel(family_, ui / h);
    if (k == 0.0) return 0.0;
  }
  return k / std::pow(h, static_cast<double>(dimension_));
}

double ContinuousKernel::scaled_difference(std::span<const double> a, std::span<const double> b, double h) const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("bandwidth must be positive and finite");
  if (a.size() != dimension_ || b.size() != dimension_) throw ShapeError("kernel argument has the wrong dimension");
  double k = 1.0;
  for (std::size_t i = 0; i < dimension_; ++i) {
    k *= univariate_kernel(family_, (a[i] - b[i]) / h);
    if (k == 0.0) return 0.0;
  }
  return k / std::pow(h, static_cast<double>(dimension_));
}

void DiscreteKernelParams::validate() const {
  auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!ok(lambda_u) || !ok(lambda_o)) throw ParameterError("discrete smoothing parameters must lie in [0, 1]");
}

double discrete_kernel(std::span<const int> x_u, std::span<const int> z_u, std::span<const int> x_o,
                       std::span<const int> z_o, const DiscreteKernelParams& params) {
  if (x_u.size() != z_u.size() || x_o.size() != z_o.size()) {
    throw ShapeError("discrete covariate vectors have different lengths");
  }
  params.validate();
  int mismatches = 0;
  for (std::size_t s = 0; s < x_u.size(); ++s) mismatches += (x_u[s] != z_u[s]) ? 1 : 0;
  int gap = 0;
  for (std::size_t s = 0; s < x_o.size(); ++s) gap += std::abs(x_o[s] - z_o[s]);
  // std::pow(0, 0) == 1, which is what the frequency estimator needs.
  return std::pow(params.lambda_u, mismatches) * std::pow(params.lambda_o, gap);
}

double composite_weight(const CovariatePoint& x, const CovariatePoint& z, const ContinuousKernel& kernel,
                        double h, const DiscreteKernelParams& params) {
  const double k = x.continuous.empty() && z.continuous.empty() && kernel.dimension() == 0
                       ? 1.0
                       : kernel.scaled_difference(x.continuous, z.continuous, h);
  if (k == 0.0) {
    // still validate the discrete part so errors do not depend on distance
    if (x.unordered.size() != z.unordered.size() || x.ordered.size() != z.ordered.size()) {
      throw ShapeError("discrete covariate vectors have different lengths");
    }
    return 0.0;
  }
  return k * discrete_kernel(x.unordered, z.unordered, x.ordered, z.ordered, params);
}

MixedKernel::MixedKernel(const ContinuousKernel& kernel, double h, const DiscreteKernelParams& params,
                         const CovariateLayout& layout, int max_ordered_gap)
    : kernel_(kernel), h_(h), params_(params) {
  if (layout.continuous > 0 && (!(h > 0.0) || !std::isfinite(h))) {
    throw ParameterError("bandwidth must be positive and finite");
  }
  if (kernel.dimension() != layout.continuous) throw ShapeError("kernel dimension does not match the covariates");
  params.validate();
  inv_scale_ = layout.continuous > 0 ? 1.0 / std::pow(h, static_cast<double>(layout.continuous)) : 1.0;
  pow_u_.resize(layout.unordered + 1);
  for (std::size_t k = 0; k < pow_u_.size(); ++k) pow_u_[k] = std::pow(params.lambda_u, static_cast<double>(k));
  pow_o_.resize(static_cast<std::size_t>(std::max(max_ordered_gap, 0)) + 1);
  for (std::size_t k = 0; k < pow_o_.size(); ++k) pow_o_[k] = std::pow(params.lambda_o, static_cast<double>(k));
}

double MixedKernel::operator()(const CovariatePoint& x, const CovariatePoint& center) const {
  double k = inv_scale_;
  for (std::size_t c = 0; c < x.continuous.size(); ++c) {
    k *= univariate_kernel(kernel_.family(), (x.continuous[c] - center.continuous[c]) / h_);
    if (k == 0.0) return 0.0;
  }
  std::size_t mismatches = 0;
  for (std::size_t s = 0; s < x.unordered.size(); ++s) mismatches += (x.unordered[s] != center.unordered[s]) ? 1 : 0;
  std::size_t gap = 0;
  for (std::size_t s = 0; s < x.ordered.size(); ++s) {
    gap += static_cast<std::size_t>(std::abs(x.ordered[s] - center.ordered[s]));
  }
  const double ko = gap < pow_o_.size() ? pow_o_[gap] : std::pow(params_.lambda_o, static_cast<double>(gap));
  return k * pow_u_[mismatches] * ko;
}

int max_ordered_gap(const Dataset& data) {
  const std::size_t vo = data.layout().ordered;
  if (vo == 0 || data.size() == 0) return 0;
  int total = 0;
  for (std::size_t s = 0; s < vo; ++s) {
    int lo = data.x_o(0)[s];
    int hi = lo;
    for (std::size_t i = 1; i < data.size(); ++i) {
      lo = std::min(lo, data.x_o(i)[s]);
      hi = std::max(hi, data.x_o(i)[s]);
    }
    total += hi - lo;
  }
  return total;
}

WeightMatrix::WeightMatrix(const Dataset& data, const MixedKernel& kernel) {
  const auto n = static_cast<Eigen::Index>(data.size());
  w_.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto center = data.point(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) w_(j, i) = kernel(data.point(static_cast<std::size_t>(i)), center);
  }
}

}  // namespace didcc
