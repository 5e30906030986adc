#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "didcc/data.hpp"

namespace didcc {

/// Compactly supported second-order kernels. Gaussian is intentionally absent.
enum class KernelFamily { Epanechnikov, Triangular, Biweight, Triweight };

std::string_view kernel_name(KernelFamily family);
KernelFamily parse_kernel(std::string_view name);

/// Univariate kernel on [-1, 1]; zero outside.
double univariate_kernel(KernelFamily family, double u);

/// Product kernel K(u) = prod_i k(u_i) on [-1,1]^dim.
class ContinuousKernel {
 public:
  explicit ContinuousKernel(KernelFamily family = KernelFamily::Epanechnikov, std::size_t dimension = 1)
      : family_(family), dimension_(dimension) {}

  KernelFamily family() const { return family_; }
  std::size_t dimension() const { return dimension_; }

  double operator()(std::span<const double> u) const;

  /// K(u / h) / h^dim. Throws ParameterError for h <= 0 and ShapeError on a length mismatch.
  double scaled(std::span<const double> u, double h) const;

  /// K_h(a - b) without materialising the difference.
  double scaled_difference(std::span<const double> a, std::span<const double> b, double h) const;

 private:
  KernelFamily family_;
  std::size_t dimension_;
};

/// Li-Racine smoothing parameters for unordered and ordered discrete covariates.
struct DiscreteKernelParams {
  double lambda_u = 0.0;
  double lambda_o = 0.0;

  void validate() const;
  bool operator==(const DiscreteKernelParams&) const = default;
  auto operator<=>(const DiscreteKernelParams&) const = default;
};

/// L(x, z) = lambda_u^{#unordered mismatches} * lambda_o^{sum |ordered gaps|}.
double discrete_kernel(std::span<const int> x_u, std::span<const int> z_u, std::span<const int> x_o,
                       std::span<const int> z_o, const DiscreteKernelParams& params);

/// K_h(x_c - z_c) * L(x_d, z_d).
double composite_weight(const CovariatePoint& x, const CovariatePoint& z, const ContinuousKernel& kernel,
                        double h, const DiscreteKernelParams& params);

/// Evaluates composite weights against a fixed centre. Powers of lambda are
/// tabulated so the discrete factor costs one lookup per pair.
class MixedKernel {
 public:
  MixedKernel(const ContinuousKernel& kernel, double h, const DiscreteKernelParams& params,
              const CovariateLayout& layout, int max_ordered_gap);

  double operator()(const CovariatePoint& x, const CovariatePoint& center) const;

  double bandwidth() const { return h_; }
  const DiscreteKernelParams& params() const { return params_; }

 private:
  ContinuousKernel kernel_;
  double h_;
  double inv_scale_;
  DiscreteKernelParams params_;
  std::vector<double> pow_u_;
  std::vector<double> pow_o_;
};

/// Largest |x_o - z_o| summed over ordered coordinates across any pair in the data.
int max_ordered_gap(const Dataset& data);

/// Opt-in dense n x n weight matrix for small samples; row j holds K(X_i; X_j).
class WeightMatrix {
 public:
  WeightMatrix(const Dataset& data, const MixedKernel& kernel);
  double operator()(std::size_t i, std::size_t j) const { return w_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& matrix() const { return w_; }

 private:
  Eigen::MatrixXd w_;
};

}  // namespace didcc
