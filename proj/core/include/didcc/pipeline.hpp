#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "didcc/bandwidth.hpp"
#include "didcc/data.hpp"
#include "didcc/estimators.hpp"
#include "didcc/inference.hpp"
#include "didcc/io.hpp"
#include "didcc/kernels.hpp"
#include "didcc/localpoly.hpp"
#include "didcc/simulation.hpp"

namespace didcc {

EstimatorKind parse_estimator(std::string_view name);

enum class ReportFormat { Json, Text, Both };

std::string_view report_format_name(ReportFormat f);
ReportFormat parse_report_format(std::string_view name);

struct FixedBandwidths {
  GpsBandwidth gps;
  std::array<OrBandwidth, 4> outcome{};  // by Cell
};

/// Grid overrides; empty vectors fall back to default_bandwidth_config.
struct GridConfig {
  CvCriterion criterion = CvCriterion::LocalLikelihood;
  std::size_t points = 8;
  std::vector<double> h_grid;
  std::vector<DiscreteKernelParams> lambda_grid;
  std::vector<double> b_grid;
  std::vector<DiscreteKernelParams> theta_grid;
  bool share_outcome = false;
};

struct RunConfig {
  std::string input;
  ColumnMapping columns;
  bool rescale = true;
  std::vector<EstimatorKind> estimators{EstimatorKind::Dr, EstimatorKind::Sz, EstimatorKind::TwfeLinear,
                                        EstimatorKind::TwfeSaturated};
  int ps_order = 1;
  int or_order = 1;
  KernelFamily kernel = KernelFamily::Epanechnikov;
  GridConfig grid;
  std::optional<FixedBandwidths> fixed;
  double truncation_floor = 0.01;
  double level = kDefaultConfidenceLevel;
  BootstrapConfig bootstrap;
  std::size_t workers = 1;
  std::string output;
  ReportFormat format = ReportFormat::Both;

  bool wants(EstimatorKind k) const;
  /// Throws ConfigError on inconsistent settings. The column mapping is checked at ingestion.
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Unknown keys are rejected; missing keys keep their defaults.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::string& path);

// ---------------------------------------------------------------------------
// Estimation report

struct EstimateSummary {
  EstimatorKind kind = EstimatorKind::Dr;
  double tau_hat = 0.0;
  double omega_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double influence_mean = 0.0;
  std::optional<double> se_bootstrap;
  bool bootstrap_clustered = false;
};

struct HausmanSummary {
  bool computed = false;
  bool degenerate = false;
  std::string message;
  HausmanResult result;
  /// Multiplier bootstrap p-values with observation-level and cluster-level multipliers.
  std::optional<double> p_bootstrap;
  std::optional<double> p_clustered;
};

struct NuisanceDiagnostics {
  std::size_t gps_converged = 0;
  std::size_t gps_not_converged = 0;
  std::size_t gps_ridge = 0;
  std::size_t gps_fallback = 0;
  std::size_t gps_truncated = 0;
  std::array<std::size_t, 4> or_ridge{};
  std::array<std::size_t, 4> or_reduced{};
  /// Largest |row sum - 1| of the pre-truncation probabilities.
  double max_row_sum_error = 0.0;
  /// Largest |mean weight - 1| over the Hajek weights used.
  double max_weight_mean_error = 0.0;
};

struct EstimationReport {
  RunConfig config;
  std::size_t n = 0;
  std::array<std::size_t, 4> cell_counts{};
  std::size_t clusters = 0;
  bool cross_validated = false;
  double reference_bandwidth = 0.0;
  GpsBandwidth gps_bandwidth;
  std::array<OrBandwidth, 4> or_bandwidths{};
  std::optional<double> criterion_value;
  std::vector<PsTraceEntry> ps_trace;
  std::vector<OrTraceEntry> or_trace;
  NuisanceDiagnostics diagnostics;
  std::vector<EstimateSummary> estimates;
  HausmanSummary test;
  std::optional<double> bias_decomposition;
  std::optional<double> rho;
  std::vector<std::string> warnings;

  const EstimateSummary* find(EstimatorKind kind) const;
};

/// Tolerances asserted on every run.
inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kWeightMeanTolerance = 1e-12;
inline constexpr double kInfluenceMeanTolerance = 1e-10;

/// Cross-validation (or fixed bandwidths), nuisance fits, estimators, SEs and
/// the Hausman test. Errors carry the stage that raised them as a prefix.
EstimationReport run_estimation(const Dataset& data, const RunConfig& config);
/// Ingests config.input first.
EstimationReport run_estimation(const RunConfig& config);

nlohmann::json report_to_json(const EstimationReport& report);
EstimationReport report_from_json(const nlohmann::json& j);
/// Text layout: analytic SEs in parentheses, bootstrap SEs in brackets.
std::string format_estimation_report(const EstimationReport& report);

nlohmann::json mc_report_to_json(const McReport& report, const McConfig& config);

}  // namespace didcc
