#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "didcc/data.hpp"
#include "didcc/localpoly.hpp"

namespace didcc::testing {

inline Sample make_sample(double y, int d, int t, std::vector<double> x_c = {}, std::vector<int> x_u = {},
                          std::vector<int> x_o = {}) {
  Sample s;
  s.y = y;
  s.d = d;
  s.t = t;
  s.x_c = std::move(x_c);
  s.x_u = std::move(x_u);
  s.x_o = std::move(x_o);
  return s;
}

struct RandomLayout {
  std::size_t continuous = 1;
  std::size_t unordered = 1;
  std::size_t ordered = 1;
  int ordered_levels = 4;
};

// Uniform covariates, a smooth outcome and every cell populated. The first
// four rows cycle through the cells.
inline std::vector<Sample> random_samples(std::mt19937_64& rng, std::size_t n, RandomLayout layout = {}) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    for (std::size_t k = 0; k < layout.continuous; ++k) s.x_c.push_back(unif(rng));
    for (std::size_t k = 0; k < layout.unordered; ++k) s.x_u.push_back(unif(rng) < 0.5 ? 0 : 1);
    for (std::size_t k = 0; k < layout.ordered; ++k) {
      s.x_o.push_back(std::uniform_int_distribution<int>(0, layout.ordered_levels - 1)(rng));
    }
    const int cell = i < 4 ? static_cast<int>(i) : std::uniform_int_distribution<int>(0, 3)(rng);
    s.d = cell < 2 ? 1 : 0;
    s.t = (cell == 0 || cell == 2) ? 1 : 0;
    double signal = 1.0 + 2.0 * s.d + 0.5 * s.t;
    for (double x : s.x_c) signal += std::sin(3.0 * x);
    for (int x : s.x_u) signal += 0.7 * x;
    for (int x : s.x_o) signal -= 0.3 * x;
    s.y = signal + 0.5 * noise(rng);
    out.push_back(std::move(s));
  }
  return out;
}

inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, RandomLayout layout = {}) {
  const auto s = random_samples(rng, n, layout);
  return Dataset::from_samples(s);
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Builds a GpsFit directly from a probability matrix (no fitting).
inline GpsFit gps_from_matrix(const Eigen::MatrixXd& p, double floor = 0.0) {
  GpsFit fit;
  fit.probabilities = p;
  const auto n = static_cast<std::size_t>(p.rows());
  fit.converged.assign(n, 1);
  fit.ridge.assign(n, 0);
  fit.fallback.assign(n, 0);
  fit.truncated.assign(n, 0);
  fit.window_counts.assign(n, 0);
  fit.gamma.assign(n, Eigen::VectorXd());
  fit.truncation_floor = floor;
  return fit;
}

inline OrCellFit or_cell_from_means(Cell cell, const Eigen::VectorXd& means) {
  OrCellFit fit;
  fit.cell = cell;
  fit.loo_means = means;
  const auto n = static_cast<std::size_t>(means.size());
  fit.beta.assign(n, Eigen::VectorXd());
  fit.effective_counts.assign(n, 0);
  fit.ridge.assign(n, 0);
  fit.reduced.assign(n, 0);
  return fit;
}

}  // namespace didcc::testing
