#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "didcc/data.hpp"
#include "didcc/kernels.hpp"
#include "didcc/multi_index.hpp"

namespace didcc {

/// Solver and evaluation settings shared by both local fitters.
struct LocalFitOptions {
  KernelFamily kernel = KernelFamily::Epanechnikov;
  int max_iterations = 50;
  /// Newton stops when the gradient sup-norm falls below this value times
  /// min(1, mean kernel weight in the window).
  double gradient_tolerance = 1e-8;
  /// Precompute the dense n x n weight matrix (small n only).
  bool cache_weights = false;
  std::size_t workers = 1;
  /// Local least squares falls back to a local constant when the Kish effective
  /// sample size (sum w)^2 / sum w^2 is below this multiple of the basis size.
  /// 0 disables the fallback.
  double sparse_window_factor = 2.0;
};

struct GpsBandwidth {
  double h = 1.0;
  DiscreteKernelParams lambda;
  bool operator==(const GpsBandwidth&) const = default;
};

struct OrBandwidth {
  double b = 1.0;
  DiscreteKernelParams theta;
  bool operator==(const OrBandwidth&) const = default;
};

// ---------------------------------------------------------------------------
// Local multinomial logit

/// Value, gradient and Hessian of the pointwise local log-likelihood.
struct LikelihoodDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// l(w, x; gamma) = sum_{S-} I_{d,t} z'gamma_{d,t} - log(1 + sum_{S-} exp(z'gamma_{d,t})),
/// where z is the basis vector of the observation around the centre and
/// gamma stacks the (1,0), (0,1), (0,0) blocks. Evaluated with log-sum-exp.
double local_likelihood(Cell cell, const Eigen::VectorXd& z, const Eigen::VectorXd& gamma);
double local_likelihood(const Sample& w, const CovariatePoint& center, const Eigen::VectorXd& gamma,
                        const MultiIndexBasis& basis);
LikelihoodDerivatives local_likelihood_derivatives(Cell cell, const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& gamma);

/// Multinomial-logistic cell probabilities (columns ordered by Cell) from the
/// three non-reference linear indices.
std::array<double, 4> logistic_probabilities(double g10, double g01, double g00);

struct GpsPointFit {
  std::array<double, 4> probabilities{};
  Eigen::VectorXd gamma;
  bool converged = false;
  bool ridge = false;
  int iterations = 0;
  std::size_t window_count = 0;
  double gradient_norm = 0.0;
};

/// Maximises the kernel-weighted local likelihood at `center`, using every
/// observation except `exclude`. The objective is normalised by the number of
/// observations used.
GpsPointFit fit_local_mlogit_at(const Dataset& data, const CovariatePoint& center, std::optional<std::size_t> exclude,
                                const MultiIndexBasis& basis, const GpsBandwidth& bandwidth,
                                const LocalFitOptions& options = {});

/// Weighted local objective and its derivatives; exposed for optimality checks.
LikelihoodDerivatives local_objective(const Dataset& data, const CovariatePoint& center,
                                      std::optional<std::size_t> exclude, const MultiIndexBasis& basis,
                                      const GpsBandwidth& bandwidth, const Eigen::VectorXd& gamma,
                                      KernelFamily kernel = KernelFamily::Epanechnikov);

/// Leave-one-out generalized propensity score at every observation.
struct GpsFit {
  Eigen::MatrixXd probabilities;  // n x 4, columns ordered by Cell
  std::vector<Eigen::VectorXd> gamma;
  std::vector<std::uint8_t> converged;
  std::vector<std::uint8_t> ridge;
  std::vector<std::uint8_t> fallback;
  std::vector<std::uint8_t> truncated;
  std::vector<std::size_t> window_counts;
  double truncation_floor = 0.0;
  GpsBandwidth bandwidth;
  int order = 1;

  std::size_t size() const { return static_cast<std::size_t>(probabilities.rows()); }
  double p(std::size_t j, Cell c) const { return probabilities(static_cast<Eigen::Index>(j), index(c)); }
  std::size_t converged_count() const;
  std::size_t ridge_count() const;
  std::size_t fallback_count() const;
  std::size_t truncated_count() const;
};

/// Requires all four cells to be non-empty. Points whose Newton iteration does
/// not converge take the local polynomial of the nearest converged point and
/// are flagged.
GpsFit fit_local_mlogit_loo(const Dataset& data, const MultiIndexBasis& basis, const GpsBandwidth& bandwidth,
                            const LocalFitOptions& options = {});

/// Clips probabilities below `floor` (no renormalisation) and flags clipped rows.
GpsFit predict_gps(GpsFit fit, double floor);

// ---------------------------------------------------------------------------
// Local least squares

struct OrPointFit {
  double mean = 0.0;
  Eigen::VectorXd beta;
  std::size_t effective_count = 0;
  bool ridge = false;
  bool reduced = false;  // local constant fallback
};

OrPointFit fit_local_ls_at(const Dataset& data, Cell cell, const CovariatePoint& center,
                           std::optional<std::size_t> exclude, const MultiIndexBasis& basis,
                           const OrBandwidth& bandwidth, const LocalFitOptions& options = {});

/// Leave-one-out outcome regression for one cell, evaluated at every observation.
struct OrCellFit {
  Cell cell = Cell::k00;
  OrBandwidth bandwidth;
  int order = 1;
  Eigen::VectorXd loo_means;
  std::vector<Eigen::VectorXd> beta;
  std::vector<std::size_t> effective_counts;
  std::vector<std::uint8_t> ridge;
  std::vector<std::uint8_t> reduced;

  bool all_finite() const { return loo_means.allFinite(); }
  std::size_t ridge_count() const;
  std::size_t reduced_count() const;
};

OrCellFit fit_local_ls_loo(const Dataset& data, Cell cell, const MultiIndexBasis& basis,
                           const OrBandwidth& bandwidth, const LocalFitOptions& options = {});

/// Outcome regressions for a subset of cells.
struct OrFit {
  std::array<std::optional<OrCellFit>, 4> cells;

  bool has(Cell c) const { return cells[static_cast<std::size_t>(index(c))].has_value(); }
  const OrCellFit& at(Cell c) const;
  const Eigen::VectorXd& mean(Cell c) const { return at(c).loo_means; }
  void set(OrCellFit fit);
};

/// Fits several cells at one bandwidth, sharing the kernel evaluations.
OrFit fit_local_ls_loo(const Dataset& data, std::span<const Cell> cells, const MultiIndexBasis& basis,
                       const OrBandwidth& bandwidth, const LocalFitOptions& options = {});

}  // namespace didcc
