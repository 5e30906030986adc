#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "didcc/error.hpp"
#include "didcc/parallel.hpp"
#include "didcc/pipeline.hpp"
#include "didcc/simulation.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIngestion = 3,
  kEstimation = 4,
  kDegenerate = 5,
};

struct EstimateArgs {
  std::string config;
  std::string input;
  std::string output;
  std::string format;
  std::string outcome, treatment, period, cluster;
  std::vector<std::string> continuous, unordered, ordered;
  std::string criterion;
  std::optional<double> floor;
  std::vector<int> orders;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  bool no_rescale = false;
  bool quiet = false;
};

struct SimulateArgs {
  int design = 1;
  std::size_t n = 1000;
  std::size_t reps = 200;
  std::uint64_t seed = 0;
  std::string criterion = "both";
  double floor = 0.01;
  std::vector<int> orders;
  std::string grid = "coarse";
  std::string output;
  bool no_twfe = false;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw didcc::ConfigError("cannot write output file '" + path + "'");
  out << content;
}

int run_estimate(const EstimateArgs& a, std::size_t workers) {
  didcc::RunConfig cfg;
  if (!a.config.empty()) cfg = didcc::load_run_config(a.config);
  if (!a.input.empty()) cfg.input = a.input;
  if (!a.output.empty()) cfg.output = a.output;
  if (!a.format.empty()) cfg.format = didcc::parse_report_format(a.format);
  if (!a.outcome.empty()) cfg.columns.outcome = a.outcome;
  if (!a.treatment.empty()) cfg.columns.treatment = a.treatment;
  if (!a.period.empty()) cfg.columns.period = a.period;
  if (!a.cluster.empty()) cfg.columns.cluster = a.cluster;
  if (!a.continuous.empty()) cfg.columns.continuous = a.continuous;
  if (!a.unordered.empty()) cfg.columns.unordered = a.unordered;
  if (!a.ordered.empty()) cfg.columns.ordered = a.ordered;
  if (!a.criterion.empty()) cfg.grid.criterion = didcc::parse_criterion(a.criterion);
  if (a.floor) cfg.truncation_floor = *a.floor;
  if (a.orders.size() == 2) {
    cfg.ps_order = a.orders[0];
    cfg.or_order = a.orders[1];
  }
  if (a.seed) cfg.bootstrap.seed = *a.seed;
  if (a.draws) cfg.bootstrap.draws = *a.draws;
  if (a.no_rescale) cfg.rescale = false;
  cfg.workers = workers;

  const didcc::EstimationReport report = didcc::run_estimation(cfg);
  const std::string text = didcc::format_estimation_report(report);
  const std::string json = didcc::report_to_json(report).dump(2) + "\n";
  if (!a.quiet) std::cout << text;
  if (!cfg.output.empty()) {
    switch (cfg.format) {
      case didcc::ReportFormat::Json: write_file(cfg.output, json); break;
      case didcc::ReportFormat::Text: write_file(cfg.output, text); break;
      case didcc::ReportFormat::Both: {
        write_file(cfg.output, json);
        write_file(std::filesystem::path(cfg.output).replace_extension(".txt").string(), text);
        break;
      }
    }
  }
  return report.test.degenerate ? kDegenerate : kOk;
}

int run_simulate(const SimulateArgs& a, std::size_t workers) {
  didcc::McConfig cfg;
  cfg.dgp.design = didcc::parse_design(a.design);
  cfg.dgp.n = a.n;
  cfg.replications = a.reps;
  cfg.seed = a.seed;
  cfg.workers = workers;
  cfg.truncation_floor = a.floor;
  cfg.grid = a.grid == "full" ? didcc::GridMode::Full : didcc::GridMode::Coarse;
  cfg.twfe = !a.no_twfe;
  if (a.orders.size() == 2) {
    cfg.ps_order = a.orders[0];
    cfg.or_order = a.orders[1];
  }
  if (a.criterion != "both") cfg.criteria = {didcc::parse_criterion(a.criterion)};

  const didcc::McReport report = didcc::run_monte_carlo(cfg);
  std::cout << didcc::format_report(report);
  if (!a.output.empty()) write_file(a.output, didcc::mc_report_to_json(report, cfg).dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust difference-in-differences under compositional changes"};
  app.require_subcommand(1);
  std::size_t workers = didcc::default_workers();
  app.add_option("--workers", workers, "Worker threads (default: $DIDCC_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate the ATT from a CSV file");
  est->fallthrough();
  est->add_option("--config", ea.config, "JSON run configuration");
  est->add_option("--input", ea.input, "CSV input (overrides the config)");
  est->add_option("--output", ea.output, "Report path");
  est->add_option("--format", ea.format, "Report format")->check(CLI::IsMember({"json", "text", "both"}));
  est->add_option("--outcome", ea.outcome, "Outcome column");
  est->add_option("--treatment", ea.treatment, "Treatment indicator column");
  est->add_option("--period", ea.period, "Period indicator column");
  est->add_option("--cluster", ea.cluster, "Cluster id column");
  est->add_option("--continuous", ea.continuous, "Continuous covariate columns");
  est->add_option("--unordered", ea.unordered, "Unordered discrete covariate columns");
  est->add_option("--ordered", ea.ordered, "Ordered discrete covariate columns");
  est->add_option("--criterion", ea.criterion, "Cross-validation criterion")->check(CLI::IsMember({"ml", "ls"}));
  est->add_option("--floor", ea.floor, "Propensity truncation floor");
  est->add_option("--orders", ea.orders, "Polynomial orders p q")->expected(2);
  est->add_option("--seed", ea.seed, "Bootstrap seed");
  est->add_option("--draws", ea.draws, "Bootstrap draws (0 disables)");
  est->add_flag("--no-rescale", ea.no_rescale, "Keep continuous covariates on their original scale");
  est->add_flag("--quiet", ea.quiet, "Do not print the text report");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo designs");
  sim->fallthrough();
  sim->add_option("--design", sa.design, "1: compositional changes, 2: stationary")->check(CLI::IsMember({1, 2}));
  sim->add_option("--n", sa.n, "Sample size")->check(CLI::PositiveNumber);
  sim->add_option("--reps", sa.reps, "Replications")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed, "Master seed");
  sim->add_option("--criterion", sa.criterion, "Cross-validation criterion")
      ->check(CLI::IsMember({"ml", "ls", "both"}));
  sim->add_option("--floor", sa.floor, "Propensity truncation floor");
  sim->add_option("--orders", sa.orders, "Polynomial orders p q")->expected(2);
  sim->add_option("--grid", sa.grid, "Bandwidth grid")->check(CLI::IsMember({"coarse", "full"}));
  sim->add_option("--output", sa.output, "JSON report path");
  sim->add_flag("--no-twfe", sa.no_twfe, "Skip the two-way fixed effects comparators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*est) return run_estimate(ea, workers);
    return run_simulate(sa, workers);
  } catch (const didcc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const didcc::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const didcc::IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << "\n";
    return kIngestion;
  } catch (const didcc::DegenerateTestError& e) {
    std::cerr << "degenerate test: " << e.what() << "\n";
    return kDegenerate;
  } catch (const didcc::Error& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kEstimation;
  }
}
