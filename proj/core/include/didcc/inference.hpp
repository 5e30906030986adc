#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "didcc/data.hpp"
#include "didcc/estimators.hpp"

namespace didcc {

/// Nominal levels reported with every test.
inline constexpr std::array<double, 3> kTestLevels{0.10, 0.05, 0.01};
/// Contrast variances below this are treated as degenerate.
inline constexpr double kDegenerateVariance = 1e-12;

struct HausmanResult {
  double statistic = 0.0;
  double v_hat = 0.0;
  double p_value = 1.0;
  double contrast = 0.0;  // tau_dr - tau_sz
  std::size_t n = 0;
  std::array<bool, 3> reject{};  // at kTestLevels

  /// True when p_value <= alpha.
  bool decision_at(double alpha) const { return p_value <= alpha; }
};

/// T = n (tau_dr - tau_sz)^2 / V, V = mean((eta_dr - eta_sz)^2), p = P(chi2_1 > T).
/// Throws DegenerateTestError when V < 1e-12.
HausmanResult hausman_test(const AttEstimate& dr, const AttEstimate& sz);

enum class WeightLaw { Exponential, Mammen, Unit };

std::string_view weight_law_name(WeightLaw law);
WeightLaw parse_weight_law(std::string_view name);

struct BootstrapConfig {
  std::size_t draws = 999;
  WeightLaw weight_law = WeightLaw::Exponential;
  /// Share one multiplier within each cluster of the data.
  bool cluster = true;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

/// Draw count below which the report carries a warning.
inline constexpr std::size_t kMinRecommendedDraws = 50;

struct BootstrapResult {
  double se = 0.0;
  std::vector<double> draws;  // (1/n) sum_g (xi_g - 1) S_g
  std::size_t clusters = 0;
  bool clustered = false;
  bool few_draws = false;
};

/// Multiplier bootstrap of an influence-function average with nuisances held
/// fixed. Draw b uses its own generator seeded from (seed, b).
BootstrapResult bootstrap_influence(const Dataset& data, const Eigen::VectorXd& influence,
                                    const BootstrapConfig& config);

BootstrapResult bootstrap_se(const Dataset& data, const AttEstimate& est, const BootstrapConfig& config);

struct BootstrapTest {
  double p_value = 1.0;
  BootstrapResult contrast;
};

/// Fraction of draws with |c*_b| >= |tau_dr - tau_sz|, bootstrapping eta_dr - eta_sz.
BootstrapTest bootstrap_hausman_pvalue(const Dataset& data, const AttEstimate& dr, const AttEstimate& sz,
                                       const BootstrapConfig& config);

}  // namespace didcc
