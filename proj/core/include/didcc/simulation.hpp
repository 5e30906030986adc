#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "didcc/bandwidth.hpp"
#include "didcc/data.hpp"
#include "didcc/estimators.hpp"
#include "didcc/inference.hpp"
#include "didcc/localpoly.hpp"

namespace didcc {

/// 1: the generalized propensity score changes across periods. 2: it is
/// averaged over periods, so (D, X) is independent of T.
enum class Design { NonStationary = 1, Stationary = 2 };

Design parse_design(int id);

struct DgpSpec {
  Design design = Design::NonStationary;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  /// Replaces f_att by this constant (homogeneous effects).
  std::optional<double> constant_effect;
  /// Standard deviation of the idiosyncratic errors eps_{d,t}.
  double noise_scale = 1.0;
};

/// X1, X2 ~ U(-1,1); X3, X4 ~ Bernoulli(0.5); X5, X6 ~ Binomial(3, 0.5).
struct Covariates {
  std::array<double, 2> c{};
  std::array<int, 4> k{};  // X3..X6

  double x(int j) const { return j <= 2 ? c[static_cast<std::size_t>(j - 1)] : k[static_cast<std::size_t>(j - 3)]; }
};

Covariates draw_covariates(std::mt19937_64& rng);
Covariates covariates_of(const Dataset& data, std::size_t i);

double f_ps_10(const Covariates& x);
double f_ps_01(const Covariates& x);
double f_ps_00(const Covariates& x);
double f_base(const Covariates& x);
double f_att(const Covariates& x);

/// P(T = 1) under the non-stationary design, E[p(1,1,X) + p(0,1,X)], by
/// Gauss-Legendre quadrature over the continuous covariates and exact
/// enumeration of the discrete ones.
double period_one_share();

/// Cell probabilities by Cell.
std::array<double, 4> oracle_probabilities(Design design, const Covariates& x);

/// m_{d,t}(x) = E[Y | D=d, T=t, X=x].
double oracle_mean(const DgpSpec& spec, Cell cell, const Covariates& x);
/// Var(Y - m_{d,t}(X) | D=d, T=t, X) = 1 + noise_scale^2.
double oracle_residual_variance(const DgpSpec& spec);
double oracle_effect(const DgpSpec& spec, const Covariates& x);

std::vector<Sample> draw_sample(const DgpSpec& spec);
Dataset draw_dataset(const DgpSpec& spec);

/// Oracle nuisance fits evaluated at every observation.
GpsFit oracle_gps_fit(const DgpSpec& spec, const Dataset& data);
OrFit oracle_or_fit(const DgpSpec& spec, const Dataset& data);

inline constexpr std::size_t kOracleDraws = 10'000'000;

/// E[Y1(1) - Y1(0) | D=1, T=1] by Monte Carlo over covariate draws, weighting
/// by p(1,1,X).
double true_att(const DgpSpec& spec, std::size_t draws = kOracleDraws, std::uint64_t seed = 20240601);

struct EfficiencyBounds {
  double robust = 0.0;      // E[eta_eff^2]
  double stationary = 0.0;  // E[eta_sz^2], valid under stationarity
  double rho = 0.0;         // (1 - E[T]) / (E[D] E[T]) Var(tau(X) | D = 1)
};

EfficiencyBounds efficiency_bounds(const DgpSpec& spec, std::size_t draws = kOracleDraws,
                                   std::uint64_t seed = 20240602);

/// Reference bound for the design: robust for NonStationary, stationary for Stationary.
double efficiency_bound(const DgpSpec& spec, std::size_t draws = kOracleDraws, std::uint64_t seed = 20240602);

/// The same population quantities by quadrature (deterministic, used for MC bias).
double true_att_exact(const DgpSpec& spec);
EfficiencyBounds efficiency_bounds_exact(const DgpSpec& spec);

// ---------------------------------------------------------------------------
// Monte Carlo driver

enum class GridMode { Coarse, Full };

struct McConfig {
  DgpSpec dgp;
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  GridMode grid = GridMode::Coarse;
  std::vector<CvCriterion> criteria{CvCriterion::LocalLikelihood, CvCriterion::LeastSquares};
  double truncation_floor = 0.01;
  double level = kDefaultConfidenceLevel;
  int ps_order = 1;
  int or_order = 1;
  bool twfe = true;
};

struct EstimateRecord {
  double tau_hat = 0.0;
  double omega_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct CriterionRecord {
  CvCriterion criterion = CvCriterion::LocalLikelihood;
  GpsBandwidth gps_bandwidth;
  std::array<OrBandwidth, 4> or_bandwidths{};
  EstimateRecord dr;
  EstimateRecord sz;
  bool test_ok = false;
  HausmanResult test;
  double bias_decomposition = 0.0;
  double rho = 0.0;
  std::size_t truncated = 0;
  std::size_t not_converged = 0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  EstimateRecord twfe_linear;
  EstimateRecord twfe_saturated;
  std::vector<CriterionRecord> criteria;
};

struct EstimatorSummary {
  std::string estimator;
  std::string label;  // specification or CV criterion
  std::size_t count = 0;
  double avg_bias = 0.0;
  double med_bias = 0.0;
  double rmse = 0.0;
  double avg_asy_var = 0.0;
  double coverage = 0.0;
  double avg_ci_length = 0.0;
};

struct TestSummary {
  std::string label;
  std::size_t count = 0;
  std::size_t degenerate = 0;
  double avg_statistic = 0.0;
  std::array<double, 3> rejection{};  // at kTestLevels
};

struct McReport {
  Design design = Design::NonStationary;
  std::size_t n = 0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::uint64_t seed = 0;
  double true_att = 0.0;
  double seb = 0.0;
  std::vector<ReplicationRecord> records;
  std::vector<EstimatorSummary> estimators;
  std::vector<TestSummary> tests;

  const EstimatorSummary& estimator(std::string_view name, std::string_view label) const;
  const TestSummary& test(std::string_view label) const;
};

/// One replication: draw, cross-validate, fit, estimate and test.
ReplicationRecord run_replication(const McConfig& config, std::size_t index);

/// Seed used for the data of replication `index`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t index);

McReport run_monte_carlo(const McConfig& config);

/// Aggregates replication records against the given true ATT.
McReport summarize(const McConfig& config, std::vector<ReplicationRecord> records, double truth, double seb);

/// Text table: one row per estimator and label, then the test rejection rates.
std::string format_report(const McReport& report);

}  // namespace didcc
