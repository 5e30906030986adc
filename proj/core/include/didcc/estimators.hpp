#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "didcc/data.hpp"
#include "didcc/localpoly.hpp"

namespace didcc {

enum class EstimatorKind { Dr, Sz, TwfeLinear, TwfeSaturated };

std::string_view estimator_name(EstimatorKind kind);

inline constexpr double kDefaultConfidenceLevel = 0.95;

struct AttEstimate {
  EstimatorKind kind = EstimatorKind::Dr;
  double tau_hat = 0.0;
  Eigen::VectorXd influence;
  double omega_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = kDefaultConfidenceLevel;

  std::size_t size() const { return static_cast<std::size_t>(influence.size()); }
  /// sqrt(omega_hat / n)
  double standard_error() const;
};

/// Fills omega_hat = mean(influence^2) and the normal confidence interval.
void finalize_estimate(AttEstimate& est, double level = kDefaultConfidenceLevel);

/// Hajek weights by Cell: w_11 = DT / E_n[DT] and, for the other cells,
/// I_{d,t} p(1,1,X) / p(d,t,X) normalised by its sample mean.
struct HajekWeights {
  std::array<Eigen::VectorXd, 4> w;
  const Eigen::VectorXd& operator[](Cell c) const { return w[static_cast<std::size_t>(index(c))]; }
};

HajekWeights hajek_weights_dr(const Dataset& data, const GpsFit& gps);

/// Stationarity weights: D 1{T=t} / E_n[.] for treated cells and
/// p~(1-D)1{T=t}/(1-p~) normalised for comparison cells, p~ = p(1,1,X) + p(1,0,X)
/// capped at 1 - floor.
HajekWeights hajek_weights_sz(const Dataset& data, const GpsFit& gps);

/// tau(X) = m11 - m10 - m01 + m00 at every observation.
Eigen::VectorXd conditional_att(const OrFit& or_fit);

/// Doubly robust ATT that stays valid under compositional changes. Needs the
/// (1,0), (0,1) and (0,0) outcome fits.
AttEstimate att_dr(const Dataset& data, const GpsFit& gps, const OrFit& or_fit,
                   double level = kDefaultConfidenceLevel);

/// Doubly robust ATT that imposes stationarity. Needs all four outcome fits.
AttEstimate att_sz(const Dataset& data, const GpsFit& gps, const OrFit& or_fit,
                   double level = kDefaultConfidenceLevel);

enum class TwfeSpec { Linear, Saturated };

/// OLS of Y on (1, T, D, TD, X), plus squares of continuous covariates and all
/// pairwise covariate products for the saturated form. The estimate is the TD
/// coefficient with HC0 influence values.
AttEstimate att_twfe(const Dataset& data, TwfeSpec spec, double level = kDefaultConfidenceLevel);

/// Design matrix used by att_twfe; column 3 is the TD interaction.
Eigen::MatrixXd twfe_design(const Dataset& data, TwfeSpec spec);

/// mean_{D=1} tau(X) - mean_{D=1,T=1} tau(X).
double bias_decomposition(const Dataset& data, const OrFit& or_fit);

/// (1 - Tbar) / (Dbar Tbar) * Var_n(tau(X) | D = 1).
double efficiency_loss_rho(const Dataset& data, const OrFit& or_fit);

}  // namespace didcc
