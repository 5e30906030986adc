#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "didcc/data.hpp"
#include "didcc/kernels.hpp"
#include "didcc/localpoly.hpp"

namespace didcc {

enum class CvCriterion { LeastSquares, LocalLikelihood };

std::string_view criterion_name(CvCriterion c);
CvCriterion parse_criterion(std::string_view name);

/// Probabilities below this value are floored inside the log of the likelihood criterion.
inline constexpr double kLikelihoodFloor = 1e-12;

struct BandwidthConfig {
  std::vector<double> h_grid;
  std::vector<DiscreteKernelParams> lambda_grid;
  std::vector<double> b_grid;
  std::vector<DiscreteKernelParams> theta_grid;
  CvCriterion criterion = CvCriterion::LocalLikelihood;
  /// One (b, theta) for every outcome cell instead of a per-cell choice.
  bool share_or_bandwidths = false;
  int ps_order = 1;
  int or_order = 1;
  /// Outcome cells whose bandwidths are selected.
  std::vector<Cell> or_cells{kAllCells.begin(), kAllCells.end()};

  void validate() const;
};

/// Reference scale sd * n^{-1/(dim+4)}, with sd the mean sample standard
/// deviation of the continuous covariates (1 without continuous covariates).
double reference_bandwidth(const Dataset& data);

/// `points` log-spaced multiples in [0.2, 20] of reference_bandwidth(data) for
/// both h and b, and lambda = theta in {0, 0.25, 0.5, 0.75, 1} for both discrete types.
BandwidthConfig default_bandwidth_config(const Dataset& data, std::size_t points = 8);

/// Monte Carlo grid: 4 log-spaced multiples in [0.5, 10] of the reference for h,
/// 8 in [0.5, 5] for the cheaper outcome fits, lambda = 0.5 and theta in
/// {0.25, 0.5, 0.75}.
BandwidthConfig coarse_bandwidth_config(const Dataset& data);

// ---------------------------------------------------------------------------
// Criterion blocks

/// (1/n) sum_i sum_S (I - p)^2 or -(1/n) sum_i sum_S I log max(p, 1e-12) on
/// pre-truncation probabilities. Non-finite input gives +infinity.
double cv_ps_block(const Dataset& data, const Eigen::MatrixXd& probabilities, CvCriterion criterion);
/// (1/n) sum_i I_{d,t,i} (Y_i - m_i)^2; +infinity when the fit is non-finite at any point.
double cv_or_block(const Dataset& data, const OrCellFit& fit);

/// PS block plus the outcome blocks of every fitted cell.
double cv_criterion_ls(const Dataset& data, const GpsFit& gps, const OrFit& or_fit);
double cv_criterion_ml(const Dataset& data, const GpsFit& gps, const OrFit& or_fit);

// ---------------------------------------------------------------------------
// Selection

struct PsTraceEntry {
  GpsBandwidth bandwidth;
  double least_squares = 0.0;
  double likelihood = 0.0;
  double value(CvCriterion c) const { return c == CvCriterion::LeastSquares ? least_squares : likelihood; }
};

struct OrTraceEntry {
  OrBandwidth bandwidth;
  std::array<double, 4> value{};  // by Cell; unused cells hold 0
};

struct SelectedBandwidths {
  CvCriterion criterion = CvCriterion::LocalLikelihood;
  GpsBandwidth gps;
  std::array<OrBandwidth, 4> outcome{};  // by Cell
  double criterion_value = 0.0;
  double ps_value = 0.0;
  std::array<double, 4> or_value{};
  std::size_t ps_index = 0;
  std::array<std::size_t, 4> or_index{};
  std::vector<Cell> or_cells;

  /// Criterion blocks at every grid point. The full criterion at a product grid
  /// point is the PS entry plus the chosen outcome entries.
  std::vector<PsTraceEntry> ps_trace;
  std::vector<OrTraceEntry> or_trace;

  const OrBandwidth& or_bandwidth(Cell c) const { return outcome[static_cast<std::size_t>(index(c))]; }
};

/// Leave-one-out fits at every candidate bandwidth, evaluated once and shared
/// between both criteria.
class CrossValidation {
 public:
  CrossValidation(const Dataset& data, BandwidthConfig config, LocalFitOptions options = {});

  SelectedBandwidths select(CvCriterion criterion) const;
  SelectedBandwidths select() const { return select(config_.criterion); }

  const BandwidthConfig& config() const { return config_; }
  const GpsFit& gps_fit(std::size_t candidate) const { return gps_fits_[candidate]; }
  const OrFit& or_fit(std::size_t candidate) const { return or_fits_[candidate]; }

  /// Fitted surfaces at a selection (pre-truncation probabilities).
  const GpsFit& gps_fit(const SelectedBandwidths& s) const { return gps_fits_[s.ps_index]; }
  OrFit or_fit(const SelectedBandwidths& s) const;

 private:
  BandwidthConfig config_;
  std::vector<GpsFit> gps_fits_;
  std::vector<OrFit> or_fits_;
  std::vector<PsTraceEntry> ps_trace_;
  std::vector<OrTraceEntry> or_trace_;
};

SelectedBandwidths select_bandwidths(const Dataset& data, const BandwidthConfig& config,
                                     const LocalFitOptions& options = {});

}  // namespace didcc
