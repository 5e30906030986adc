#include "didcc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "didcc/error.hpp"

namespace didcc {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string prefixed(std::string_view stage, const std::exception& e) {
  return std::string(stage) + ": " + e.what();
}

// Rethrows library errors with the stage name in front, keeping their type.
template <class F>
auto stage(std::string_view name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DegenerateTestError& e) {
    throw DegenerateTestError(prefixed(name, e));
  } catch (const SelectionError& e) {
    throw SelectionError(prefixed(name, e));
  } catch (const EstimationError& e) {
    throw EstimationError(prefixed(name, e));
  } catch (const ShapeError& e) {
    throw ShapeError(prefixed(name, e));
  } catch (const ParameterError& e) {
    throw ParameterError(prefixed(name, e));
  } catch (const IngestionError& e) {
    throw IngestionError(prefixed(name, e));
  } catch (const ConfigError& e) {
    throw ConfigError(prefixed(name, e));
  }
}

std::string cell_key(Cell c) {
  return std::to_string(treatment_of(c)) + std::to_string(period_of(c));
}

Cell parse_cell_key(const std::string& key) {
  for (Cell c : kAllCells) {
    if (cell_key(c) == key || cell_name(c) == key) return c;
  }
  throw ConfigError("unknown cell '" + key + "' (use 11, 10, 01 or 00)");
}

// JSON writes non-finite doubles as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_of(const json& j) { return j.is_null() ? kInf : j.get<double>(); }

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
std::optional<double> opt_num_of(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json lambda_json(const DiscreteKernelParams& p) { return json::array({p.lambda_u, p.lambda_o}); }

DiscreteKernelParams lambda_of(const json& j) {
  DiscreteKernelParams p;
  if (j.is_number()) {
    p.lambda_u = p.lambda_o = j.get<double>();
  } else if (j.is_array() && j.size() == 2) {
    p.lambda_u = j[0].get<double>();
    p.lambda_o = j[1].get<double>();
  } else {
    throw ConfigError("discrete smoothing parameter must be a number or a [unordered, ordered] pair");
  }
  return p;
}

json gps_bw_json(const GpsBandwidth& b) { return {{"h", b.h}, {"lambda", lambda_json(b.lambda)}}; }
json or_bw_json(const OrBandwidth& b) { return {{"b", b.b}, {"theta", lambda_json(b.theta)}}; }

GpsBandwidth gps_bw_of(const json& j) {
  GpsBandwidth b;
  b.h = j.at("h").get<double>();
  if (j.contains("lambda")) b.lambda = lambda_of(j.at("lambda"));
  return b;
}

OrBandwidth or_bw_of(const json& j) {
  OrBandwidth b;
  b.b = j.at("b").get<double>();
  if (j.contains("theta")) b.theta = lambda_of(j.at("theta"));
  return b;
}

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

EstimatorKind parse_estimator(std::string_view name) {
  for (EstimatorKind k : {EstimatorKind::Dr, EstimatorKind::Sz, EstimatorKind::TwfeLinear, EstimatorKind::TwfeSaturated}) {
    if (estimator_name(k) == name) return k;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view report_format_name(ReportFormat f) {
  switch (f) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Text: return "text";
    case ReportFormat::Both: return "both";
  }
  return "";
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "text") return ReportFormat::Text;
  if (name == "both") return ReportFormat::Both;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

bool RunConfig::wants(EstimatorKind k) const {
  return std::find(estimators.begin(), estimators.end(), k) != estimators.end();
}

void RunConfig::validate() const {
  if (estimators.empty()) throw ConfigError("no estimator selected");
  if (std::set<EstimatorKind>(estimators.begin(), estimators.end()).size() != estimators.size()) {
    throw ConfigError("an estimator is listed twice");
  }
  if (ps_order < 0 || or_order < 0) throw ConfigError("polynomial orders must be nonnegative");
  if (!(truncation_floor >= 0.0 && truncation_floor < 0.25)) throw ConfigError("truncation floor must lie in [0, 0.25)");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  if (grid.points == 0) throw ConfigError("grid needs at least one point");
  try {
    for (const auto& l : grid.lambda_grid) l.validate();
    for (const auto& l : grid.theta_grid) l.validate();
    if (fixed) {
      fixed->gps.lambda.validate();
      for (const auto& o : fixed->outcome) o.theta.validate();
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  auto positive = [](const std::vector<double>& g) {
    return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
  };
  if (!positive(grid.h_grid) || !positive(grid.b_grid)) throw ConfigError("grid bandwidths must be positive");
  if (fixed) {
    if (!(fixed->gps.h > 0.0)) throw ConfigError("fixed bandwidth h must be positive");
    for (const auto& o : fixed->outcome) {
      if (!(o.b > 0.0)) throw ConfigError("fixed bandwidth b must be positive");
    }
  }
}

void to_json(json& j, const RunConfig& c) {
  json cols = {{"outcome", c.columns.outcome},       {"treatment", c.columns.treatment},
               {"period", c.columns.period},         {"continuous", c.columns.continuous},
               {"unordered", c.columns.unordered},   {"ordered", c.columns.ordered},
               {"cluster", c.columns.cluster ? json(*c.columns.cluster) : json(nullptr)}};
  json est = json::array();
  for (EstimatorKind k : c.estimators) est.push_back(std::string(estimator_name(k)));
  json bw = {{"criterion", std::string(criterion_name(c.grid.criterion))},
             {"grid_points", c.grid.points},
             {"h_grid", c.grid.h_grid},
             {"b_grid", c.grid.b_grid},
             {"lambda_grid", json::array()},
             {"theta_grid", json::array()},
             {"share_outcome", c.grid.share_outcome}};
  for (const auto& l : c.grid.lambda_grid) bw["lambda_grid"].push_back(lambda_json(l));
  for (const auto& l : c.grid.theta_grid) bw["theta_grid"].push_back(lambda_json(l));
  if (c.fixed) {
    json outcome = json::object();
    for (Cell cell : kAllCells) outcome[cell_key(cell)] = or_bw_json(c.fixed->outcome[static_cast<std::size_t>(index(cell))]);
    bw["fixed"] = {{"gps", gps_bw_json(c.fixed->gps)}, {"outcome", outcome}};
  } else {
    bw["fixed"] = nullptr;
  }
  j = {{"input", c.input},
       {"columns", cols},
       {"rescale", c.rescale},
       {"estimators", est},
       {"orders", {{"ps", c.ps_order}, {"or", c.or_order}}},
       {"kernel", std::string(kernel_name(c.kernel))},
       {"bandwidth", bw},
       {"truncation_floor", c.truncation_floor},
       {"level", c.level},
       {"bootstrap",
        {{"draws", c.bootstrap.draws},
         {"weight_law", std::string(weight_law_name(c.bootstrap.weight_law))},
         {"cluster", c.bootstrap.cluster},
         {"seed", c.bootstrap.seed}}},
       {"workers", c.workers},
       {"output", {{"path", c.output}, {"format", std::string(report_format_name(c.format))}}}};
}

void from_json(const json& j, RunConfig& c) {
  try {
    check_keys(j, "config", {"input", "columns", "rescale", "estimators", "orders", "kernel", "bandwidth",
                             "truncation_floor", "level", "bootstrap", "workers", "output"});
    read_if(j, "input", c.input);
    if (j.contains("columns")) {
      const json& cols = j.at("columns");
      check_keys(cols, "columns", {"outcome", "treatment", "period", "continuous", "unordered", "ordered", "cluster"});
      read_if(cols, "outcome", c.columns.outcome);
      read_if(cols, "treatment", c.columns.treatment);
      read_if(cols, "period", c.columns.period);
      read_if(cols, "continuous", c.columns.continuous);
      read_if(cols, "unordered", c.columns.unordered);
      read_if(cols, "ordered", c.columns.ordered);
      if (cols.contains("cluster") && !cols.at("cluster").is_null()) c.columns.cluster = cols.at("cluster").get<std::string>();
    }
    read_if(j, "rescale", c.rescale);
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) c.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("orders")) {
      const json& o = j.at("orders");
      check_keys(o, "orders", {"ps", "or"});
      read_if(o, "ps", c.ps_order);
      read_if(o, "or", c.or_order);
    }
    if (j.contains("kernel")) c.kernel = parse_kernel(j.at("kernel").get<std::string>());
    if (j.contains("bandwidth")) {
      const json& b = j.at("bandwidth");
      check_keys(b, "bandwidth", {"criterion", "grid_points", "h_grid", "b_grid", "lambda_grid", "theta_grid",
                                  "share_outcome", "fixed"});
      if (b.contains("criterion")) c.grid.criterion = parse_criterion(b.at("criterion").get<std::string>());
      read_if(b, "grid_points", c.grid.points);
      read_if(b, "h_grid", c.grid.h_grid);
      read_if(b, "b_grid", c.grid.b_grid);
      if (b.contains("lambda_grid")) {
        c.grid.lambda_grid.clear();
        for (const auto& l : b.at("lambda_grid")) c.grid.lambda_grid.push_back(lambda_of(l));
      }
      if (b.contains("theta_grid")) {
        c.grid.theta_grid.clear();
        for (const auto& l : b.at("theta_grid")) c.grid.theta_grid.push_back(lambda_of(l));
      }
      read_if(b, "share_outcome", c.grid.share_outcome);
      if (b.contains("fixed") && !b.at("fixed").is_null()) {
        const json& f = b.at("fixed");
        check_keys(f, "bandwidth.fixed", {"gps", "outcome"});
        FixedBandwidths fb;
        fb.gps = gps_bw_of(f.at("gps"));
        const json& out = f.at("outcome");
        if (out.contains("b")) {
          for (auto& o : fb.outcome) o = or_bw_of(out);
        } else {
          std::array<bool, 4> seen{};
          for (const auto& item : out.items()) {
            const Cell cell = parse_cell_key(item.key());
            fb.outcome[static_cast<std::size_t>(index(cell))] = or_bw_of(item.value());
            seen[static_cast<std::size_t>(index(cell))] = true;
          }
          if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
            throw ConfigError("fixed outcome bandwidths must cover all four cells");
          }
        }
        c.fixed = fb;
      } else {
        c.fixed.reset();
      }
    }
    read_if(j, "truncation_floor", c.truncation_floor);
    read_if(j, "level", c.level);
    if (j.contains("bootstrap")) {
      const json& b = j.at("bootstrap");
      check_keys(b, "bootstrap", {"draws", "weight_law", "cluster", "seed"});
      read_if(b, "draws", c.bootstrap.draws);
      if (b.contains("weight_law")) c.bootstrap.weight_law = parse_weight_law(b.at("weight_law").get<std::string>());
      read_if(b, "cluster", c.bootstrap.cluster);
      read_if(b, "seed", c.bootstrap.seed);
    }
    read_if(j, "workers", c.workers);
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, "output", {"path", "format"});
      read_if(o, "path", c.output);
      if (o.contains("format")) c.format = parse_report_format(o.at("format").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig c;
  from_json(j, c);
  return c;
}

const EstimateSummary* EstimationReport::find(EstimatorKind kind) const {
  for (const auto& e : estimates) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

namespace {

EstimateSummary summarize_estimate(const AttEstimate& est) {
  EstimateSummary s;
  s.kind = est.kind;
  s.tau_hat = est.tau_hat;
  s.omega_hat = est.omega_hat;
  s.se = est.standard_error();
  s.ci_low = est.ci_low;
  s.ci_high = est.ci_high;
  s.influence_mean = est.influence.mean();
  return s;
}

double weight_mean_error(const HajekWeights& w, std::span<const Cell> cells) {
  double worst = 0.0;
  for (Cell c : cells) worst = std::max(worst, std::abs(w[c].mean() - 1.0));
  return worst;
}

BandwidthConfig grid_for(const Dataset& data, const RunConfig& cfg) {
  BandwidthConfig bc = default_bandwidth_config(data, cfg.grid.points);
  if (!cfg.grid.h_grid.empty()) bc.h_grid = cfg.grid.h_grid;
  if (!cfg.grid.b_grid.empty()) bc.b_grid = cfg.grid.b_grid;
  if (!cfg.grid.lambda_grid.empty()) bc.lambda_grid = cfg.grid.lambda_grid;
  if (!cfg.grid.theta_grid.empty()) bc.theta_grid = cfg.grid.theta_grid;
  bc.criterion = cfg.grid.criterion;
  bc.share_or_bandwidths = cfg.grid.share_outcome;
  bc.ps_order = cfg.ps_order;
  bc.or_order = cfg.or_order;
  return bc;
}

}  // namespace

EstimationReport run_estimation(const Dataset& data, const RunConfig& cfg) {
  stage("config", [&] { cfg.validate(); });
  EstimationReport rep;
  rep.config = cfg;
  rep.n = data.size();
  rep.cell_counts = data.cell_counts();
  if (data.has_clusters()) {
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < data.size(); ++i) ids.insert(data.cluster(i));
    rep.clusters = ids.size();
  }
  stage("data", [&] {
    for (Cell c : kAllCells) {
      if (rep.cell_counts[static_cast<std::size_t>(index(c))] == 0) {
        throw EstimationError("empty treatment cell " + std::string(cell_name(c)));
      }
    }
  });
  rep.reference_bandwidth = reference_bandwidth(data);

  LocalFitOptions opts;
  opts.kernel = cfg.kernel;
  opts.workers = std::max<std::size_t>(1, cfg.workers);

  const bool need_nuisance = cfg.wants(EstimatorKind::Dr) || cfg.wants(EstimatorKind::Sz);
  std::optional<GpsFit> gps_raw;
  OrFit or_fit;
  if (need_nuisance) {
    stage("bandwidth", [&] {
      if (cfg.fixed) {
        rep.gps_bandwidth = cfg.fixed->gps;
        rep.or_bandwidths = cfg.fixed->outcome;
        gps_raw = fit_local_mlogit_loo(data, MultiIndexBasis(cfg.ps_order, data.layout().continuous), cfg.fixed->gps, opts);
        const MultiIndexBasis or_basis(cfg.or_order, data.layout().continuous);
        for (Cell c : kAllCells) {
          or_fit.set(fit_local_ls_loo(data, c, or_basis, cfg.fixed->outcome[static_cast<std::size_t>(index(c))], opts));
        }
        return;
      }
      const CrossValidation cv(data, grid_for(data, cfg), opts);
      const SelectedBandwidths sel = cv.select();
      rep.cross_validated = true;
      rep.gps_bandwidth = sel.gps;
      rep.or_bandwidths = sel.outcome;
      rep.criterion_value = sel.criterion_value;
      rep.ps_trace = sel.ps_trace;
      rep.or_trace = sel.or_trace;
      gps_raw = cv.gps_fit(sel);
      or_fit = cv.or_fit(sel);
    });
  }

  std::optional<AttEstimate> dr, sz;
  if (need_nuisance) {
    stage("estimators", [&] {
      auto& d = rep.diagnostics;
      const Eigen::VectorXd rows = gps_raw->probabilities.rowwise().sum();
      d.max_row_sum_error = (rows.array() - 1.0).abs().maxCoeff();
      if (!(d.max_row_sum_error <= kRowSumTolerance)) {
        throw EstimationError("propensity rows do not sum to one (error " + std::to_string(d.max_row_sum_error) + ")");
      }
      const GpsFit gps = predict_gps(*gps_raw, cfg.truncation_floor);
      d.gps_converged = gps.converged_count();
      d.gps_not_converged = gps.size() - d.gps_converged;
      d.gps_ridge = gps.ridge_count();
      d.gps_fallback = gps.fallback_count();
      d.gps_truncated = gps.truncated_count();
      for (Cell c : kAllCells) {
        d.or_ridge[static_cast<std::size_t>(index(c))] = or_fit.at(c).ridge_count();
        d.or_reduced[static_cast<std::size_t>(index(c))] = or_fit.at(c).reduced_count();
      }
      if (cfg.wants(EstimatorKind::Dr)) {
        d.max_weight_mean_error = std::max(d.max_weight_mean_error, weight_mean_error(hajek_weights_dr(data, gps), kAllCells));
        dr = att_dr(data, gps, or_fit, cfg.level);
      }
      if (cfg.wants(EstimatorKind::Sz)) {
        d.max_weight_mean_error = std::max(d.max_weight_mean_error, weight_mean_error(hajek_weights_sz(data, gps), kAllCells));
        sz = att_sz(data, gps, or_fit, cfg.level);
      }
      if (!(d.max_weight_mean_error <= kWeightMeanTolerance)) {
        throw EstimationError("Hajek weights do not average one");
      }
      rep.bias_decomposition = bias_decomposition(data, or_fit);
      rep.rho = efficiency_loss_rho(data, or_fit);
    });
  }

  std::vector<AttEstimate> all;
  if (dr) all.push_back(*dr);
  if (sz) all.push_back(*sz);
  stage("estimators", [&] {
    if (cfg.wants(EstimatorKind::TwfeLinear)) all.push_back(att_twfe(data, TwfeSpec::Linear, cfg.level));
    if (cfg.wants(EstimatorKind::TwfeSaturated)) all.push_back(att_twfe(data, TwfeSpec::Saturated, cfg.level));
  });
  // Keep the configured order.
  for (EstimatorKind k : cfg.estimators) {
    for (const auto& e : all) {
      if (e.kind != k) continue;
      EstimateSummary s = summarize_estimate(e);
      const bool nonparametric = k == EstimatorKind::Dr || k == EstimatorKind::Sz;
      if (nonparametric && !(std::abs(s.influence_mean) <= kInfluenceMeanTolerance)) {
        throw EstimationError(std::string("estimators: influence function of ") + std::string(estimator_name(k)) +
                              " is not centred");
      }
      if (cfg.bootstrap.draws > 0) {
        stage("inference", [&] {
          BootstrapConfig bc = cfg.bootstrap;
          bc.workers = opts.workers;
          const BootstrapResult br = bootstrap_se(data, e, bc);
          s.se_bootstrap = br.se;
          s.bootstrap_clustered = br.clustered;
        });
      }
      rep.estimates.push_back(s);
    }
  }
  if (cfg.bootstrap.draws > 0 && cfg.bootstrap.draws < kMinRecommendedDraws) {
    rep.warnings.push_back("bootstrap uses only " + std::to_string(cfg.bootstrap.draws) + " draws");
  }
  if (rep.diagnostics.gps_not_converged > 0) {
    rep.warnings.push_back(std::to_string(rep.diagnostics.gps_not_converged) +
                           " local likelihood fits did not converge and use a neighbouring fit");
  }

  if (dr && sz) {
    rep.test.computed = true;
    try {
      rep.test.result = hausman_test(*dr, *sz);
    } catch (const DegenerateTestError& e) {
      rep.test.degenerate = true;
      rep.test.message = std::string("inference: ") + e.what();
    }
    if (!rep.test.degenerate && cfg.bootstrap.draws > 0) {
      stage("inference", [&] {
        BootstrapConfig bc = cfg.bootstrap;
        bc.workers = opts.workers;
        bc.cluster = false;
        rep.test.p_bootstrap = bootstrap_hausman_pvalue(data, *dr, *sz, bc).p_value;
        if (data.has_clusters() && cfg.bootstrap.cluster) {
          bc.cluster = true;
          rep.test.p_clustered = bootstrap_hausman_pvalue(data, *dr, *sz, bc).p_value;
        }
      });
    }
  }
  return rep;
}

EstimationReport run_estimation(const RunConfig& cfg) {
  stage("config", [&] { cfg.validate(); });
  if (cfg.input.empty()) throw ConfigError("config: no input file given");
  stage("config", [&] { cfg.columns.validate(); });
  const Dataset data = stage("ingestion", [&] {
    const IngestResult in = ingest_csv(cfg.input, cfg.columns, IngestOptions{cfg.rescale});
    try {
      return Dataset::from_samples(in.samples);
    } catch (const Error& e) {
      throw IngestionError(e.what());
    }
  });
  return run_estimation(data, cfg);
}

// ---------------------------------------------------------------------------
// Report serialization

json report_to_json(const EstimationReport& r) {
  json j;
  j["config"] = r.config;
  j["n"] = r.n;
  json counts = json::object();
  for (Cell c : kAllCells) counts[cell_key(c)] = r.cell_counts[static_cast<std::size_t>(index(c))];
  j["cell_counts"] = counts;
  j["clusters"] = r.clusters;

  json bw;
  bw["cross_validated"] = r.cross_validated;
  bw["reference"] = r.reference_bandwidth;
  bw["gps"] = gps_bw_json(r.gps_bandwidth);
  json outcome = json::object();
  for (Cell c : kAllCells) outcome[cell_key(c)] = or_bw_json(r.or_bandwidths[static_cast<std::size_t>(index(c))]);
  bw["outcome"] = outcome;
  bw["criterion_value"] = opt_num(r.criterion_value);
  json ps = json::array();
  for (const auto& e : r.ps_trace) {
    ps.push_back({{"h", e.bandwidth.h}, {"lambda", lambda_json(e.bandwidth.lambda)}, {"ls", num(e.least_squares)},
                  {"ml", num(e.likelihood)}});
  }
  json ot = json::array();
  for (const auto& e : r.or_trace) {
    json v = json::object();
    for (Cell c : kAllCells) v[cell_key(c)] = num(e.value[static_cast<std::size_t>(index(c))]);
    ot.push_back({{"b", e.bandwidth.b}, {"theta", lambda_json(e.bandwidth.theta)}, {"value", v}});
  }
  bw["ps_trace"] = ps;
  bw["or_trace"] = ot;
  j["bandwidths"] = bw;

  const auto& d = r.diagnostics;
  json dj = {{"gps_converged", d.gps_converged},
             {"gps_not_converged", d.gps_not_converged},
             {"gps_ridge", d.gps_ridge},
             {"gps_fallback", d.gps_fallback},
             {"gps_truncated", d.gps_truncated},
             {"max_row_sum_error", d.max_row_sum_error},
             {"max_weight_mean_error", d.max_weight_mean_error}};
  json ridge = json::object(), reduced = json::object();
  for (Cell c : kAllCells) {
    ridge[cell_key(c)] = d.or_ridge[static_cast<std::size_t>(index(c))];
    reduced[cell_key(c)] = d.or_reduced[static_cast<std::size_t>(index(c))];
  }
  dj["or_ridge"] = ridge;
  dj["or_reduced"] = reduced;
  j["diagnostics"] = dj;

  json est = json::array();
  for (const auto& e : r.estimates) {
    est.push_back({{"estimator", std::string(estimator_name(e.kind))},
                   {"tau_hat", e.tau_hat},
                   {"omega_hat", e.omega_hat},
                   {"se", e.se},
                   {"ci_low", e.ci_low},
                   {"ci_high", e.ci_high},
                   {"influence_mean", e.influence_mean},
                   {"se_bootstrap", opt_num(e.se_bootstrap)},
                   {"bootstrap_clustered", e.bootstrap_clustered}});
  }
  j["estimates"] = est;

  const auto& t = r.test;
  j["hausman"] = {{"computed", t.computed},
                  {"degenerate", t.degenerate},
                  {"message", t.message},
                  {"statistic", t.result.statistic},
                  {"v_hat", t.result.v_hat},
                  {"contrast", t.result.contrast},
                  {"n", t.result.n},
                  {"p_value", t.result.p_value},
                  {"reject", t.result.reject},
                  {"p_bootstrap", opt_num(t.p_bootstrap)},
                  {"p_clustered", opt_num(t.p_clustered)}};
  j["bias_decomposition"] = opt_num(r.bias_decomposition);
  j["rho"] = opt_num(r.rho);
  j["warnings"] = r.warnings;
  return j;
}

EstimationReport report_from_json(const json& j) {
  EstimationReport r;
  try {
    from_json(j.at("config"), r.config);
    r.n = j.at("n").get<std::size_t>();
    for (Cell c : kAllCells) r.cell_counts[static_cast<std::size_t>(index(c))] = j.at("cell_counts").at(cell_key(c)).get<std::size_t>();
    r.clusters = j.at("clusters").get<std::size_t>();

    const json& bw = j.at("bandwidths");
    r.cross_validated = bw.at("cross_validated").get<bool>();
    r.reference_bandwidth = bw.at("reference").get<double>();
    r.gps_bandwidth = gps_bw_of(bw.at("gps"));
    for (Cell c : kAllCells) r.or_bandwidths[static_cast<std::size_t>(index(c))] = or_bw_of(bw.at("outcome").at(cell_key(c)));
    r.criterion_value = opt_num_of(bw.at("criterion_value"));
    for (const auto& e : bw.at("ps_trace")) {
      r.ps_trace.push_back({GpsBandwidth{e.at("h").get<double>(), lambda_of(e.at("lambda"))}, num_of(e.at("ls")),
                            num_of(e.at("ml"))});
    }
    for (const auto& e : bw.at("or_trace")) {
      OrTraceEntry o{OrBandwidth{e.at("b").get<double>(), lambda_of(e.at("theta"))}, {}};
      for (Cell c : kAllCells) o.value[static_cast<std::size_t>(index(c))] = num_of(e.at("value").at(cell_key(c)));
      r.or_trace.push_back(o);
    }

    const json& dj = j.at("diagnostics");
    auto& d = r.diagnostics;
    d.gps_converged = dj.at("gps_converged").get<std::size_t>();
    d.gps_not_converged = dj.at("gps_not_converged").get<std::size_t>();
    d.gps_ridge = dj.at("gps_ridge").get<std::size_t>();
    d.gps_fallback = dj.at("gps_fallback").get<std::size_t>();
    d.gps_truncated = dj.at("gps_truncated").get<std::size_t>();
    d.max_row_sum_error = dj.at("max_row_sum_error").get<double>();
    d.max_weight_mean_error = dj.at("max_weight_mean_error").get<double>();
    for (Cell c : kAllCells) {
      d.or_ridge[static_cast<std::size_t>(index(c))] = dj.at("or_ridge").at(cell_key(c)).get<std::size_t>();
      d.or_reduced[static_cast<std::size_t>(index(c))] = dj.at("or_reduced").at(cell_key(c)).get<std::size_t>();
    }

    for (const auto& e : j.at("estimates")) {
      EstimateSummary s;
      s.kind = parse_estimator(e.at("estimator").get<std::string>());
      s.tau_hat = e.at("tau_hat").get<double>();
      s.omega_hat = e.at("omega_hat").get<double>();
      s.se = e.at("se").get<double>();
      s.ci_low = e.at("ci_low").get<double>();
      s.ci_high = e.at("ci_high").get<double>();
      s.influence_mean = e.at("influence_mean").get<double>();
      s.se_bootstrap = opt_num_of(e.at("se_bootstrap"));
      s.bootstrap_clustered = e.at("bootstrap_clustered").get<bool>();
      r.estimates.push_back(s);
    }

    const json& t = j.at("hausman");
    r.test.computed = t.at("computed").get<bool>();
    r.test.degenerate = t.at("degenerate").get<bool>();
    r.test.message = t.at("message").get<std::string>();
    r.test.result.statistic = t.at("statistic").get<double>();
    r.test.result.v_hat = t.at("v_hat").get<double>();
    r.test.result.contrast = t.at("contrast").get<double>();
    r.test.result.n = t.at("n").get<std::size_t>();
    r.test.result.p_value = t.at("p_value").get<double>();
    r.test.result.reject = t.at("reject").get<std::array<bool, 3>>();
    r.test.p_bootstrap = opt_num_of(t.at("p_bootstrap"));
    r.test.p_clustered = opt_num_of(t.at("p_clustered"));
    r.bias_decomposition = opt_num_of(j.at("bias_decomposition"));
    r.rho = opt_num_of(j.at("rho"));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

namespace {

std::string estimator_label(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Dr: return "tau_dr";
    case EstimatorKind::Sz: return "tau_sz";
    case EstimatorKind::TwfeLinear: return "tau_fe (linear)";
    case EstimatorKind::TwfeSaturated: return "tau_fe (saturated)";
  }
  return "";
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string lambda_text(const DiscreteKernelParams& p) {
  if (p.lambda_u == p.lambda_o) return fmt(p.lambda_u, 2);
  return "(" + fmt(p.lambda_u, 2) + ", " + fmt(p.lambda_o, 2) + ")";
}

}  // namespace

std::string format_estimation_report(const EstimationReport& r) {
  std::ostringstream os;
  const auto& cfg = r.config;
  os << "ATT estimates under possible compositional changes\n";
  os << "n = " << r.n << "; cells (1,1) " << r.cell_counts[0] << ", (1,0) " << r.cell_counts[1] << ", (0,1) "
     << r.cell_counts[2] << ", (0,0) " << r.cell_counts[3];
  if (r.clusters > 0) os << "; clusters " << r.clusters;
  os << "\n";
  os << "orders p = " << cfg.ps_order << ", q = " << cfg.or_order << "; kernel " << kernel_name(cfg.kernel)
     << "; truncation floor " << cfg.truncation_floor << "; " << fmt(100.0 * cfg.level, 0) << "% CI\n\n";

  os << "Bandwidths (" << (r.cross_validated ? "cross-validated, criterion " + std::string(criterion_name(cfg.grid.criterion))
                                             : std::string("fixed"))
     << ")\n";
  os << "  propensity     h = " << fmt(r.gps_bandwidth.h, 4) << "  lambda = " << lambda_text(r.gps_bandwidth.lambda) << "\n";
  for (Cell c : kAllCells) {
    const auto& b = r.or_bandwidths[static_cast<std::size_t>(index(c))];
    os << "  outcome " << cell_name(c) << "  b = " << fmt(b.b, 4) << "  theta = " << lambda_text(b.theta) << "\n";
  }
  if (r.cross_validated) {
    os << "  grid: " << r.ps_trace.size() << " propensity and " << r.or_trace.size() << " outcome candidates";
    if (r.criterion_value) os << "; criterion " << fmt(*r.criterion_value, 6);
    os << "\n";
  }
  const auto& d = r.diagnostics;
  os << "\nDiagnostics\n";
  os << "  local likelihood: " << d.gps_converged << " converged, " << d.gps_not_converged << " not converged, "
     << d.gps_ridge << " ridged, " << d.gps_truncated << " truncated\n";
  os << "  local least squares ridged / local constant:";
  for (Cell c : kAllCells) {
    const auto k = static_cast<std::size_t>(index(c));
    os << " " << cell_name(c) << " " << d.or_ridge[k] << "/" << d.or_reduced[k];
  }
  os << "\n\n";

  os << "Estimates (analytic SE in parentheses, bootstrap SE in brackets)\n";
  for (const auto& e : r.estimates) {
    os << "  " << std::left << std::setw(20) << estimator_label(e.kind) << std::right << std::setw(10) << fmt(e.tau_hat)
       << "   (" << fmt(e.se) << ")";
    if (e.se_bootstrap) os << "   [" << fmt(*e.se_bootstrap) << "]";
    os << "   CI [" << fmt(e.ci_low) << ", " << fmt(e.ci_high) << "]\n";
  }

  if (r.test.computed) {
    os << "\nHausman-type test (tau_dr vs tau_sz)\n";
    if (r.test.degenerate) {
      os << "  degenerate: " << r.test.message << "\n";
    } else {
      os << "  statistic " << fmt(r.test.result.statistic) << "   p-value " << fmt(r.test.result.p_value);
      if (r.test.p_bootstrap) os << "   bootstrap p-value " << fmt(*r.test.p_bootstrap);
      if (r.test.p_clustered) os << "   [clustered " << fmt(*r.test.p_clustered) << "]";
      os << "\n";
    }
  }
  if (r.bias_decomposition) os << "\nbias decomposition " << fmt(*r.bias_decomposition) << "\n";
  if (r.rho) os << "efficiency loss rho " << fmt(*r.rho) << "\n";
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

json mc_report_to_json(const McReport& r, const McConfig& c) {
  json j;
  j["design"] = static_cast<int>(r.design);
  j["n"] = r.n;
  j["replications"] = r.replications;
  j["failures"] = r.failures;
  j["seed"] = r.seed;
  j["true_att"] = r.true_att;
  j["efficiency_bound"] = r.seb;
  j["config"] = {{"grid", c.grid == GridMode::Coarse ? "coarse" : "full"},
                 {"truncation_floor", c.truncation_floor},
                 {"level", c.level},
                 {"orders", {{"ps", c.ps_order}, {"or", c.or_order}}},
                 {"noise_scale", c.dgp.noise_scale},
                 {"constant_effect", c.dgp.constant_effect ? json(*c.dgp.constant_effect) : json(nullptr)}};
  json est = json::array();
  for (const auto& e : r.estimators) {
    est.push_back({{"estimator", e.estimator},
                   {"label", e.label},
                   {"count", e.count},
                   {"avg_bias", num(e.avg_bias)},
                   {"med_bias", num(e.med_bias)},
                   {"rmse", num(e.rmse)},
                   {"avg_asy_var", num(e.avg_asy_var)},
                   {"coverage", num(e.coverage)},
                   {"avg_ci_length", num(e.avg_ci_length)}});
  }
  j["estimators"] = est;
  json tests = json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"label", t.label},
                     {"count", t.count},
                     {"degenerate", t.degenerate},
                     {"avg_statistic", num(t.avg_statistic)},
                     {"rejection", {{"0.10", num(t.rejection[0])}, {"0.05", num(t.rejection[1])}, {"0.01", num(t.rejection[2])}}}});
  }
  j["tests"] = tests;
  json recs = json::array();
  for (const auto& rec : r.records) {
    json x = {{"index", rec.index}, {"ok", rec.ok}};
    if (!rec.ok) {
      x["error"] = rec.error;
      recs.push_back(x);
      continue;
    }
    auto er = [](const EstimateRecord& e) {
      return json{{"tau_hat", e.tau_hat}, {"omega_hat", e.omega_hat}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}};
    };
    x["twfe_linear"] = er(rec.twfe_linear);
    x["twfe_saturated"] = er(rec.twfe_saturated);
    json crit = json::array();
    for (const auto& cr : rec.criteria) {
      json o = json::object();
      for (Cell cell : kAllCells) o[cell_key(cell)] = or_bw_json(cr.or_bandwidths[static_cast<std::size_t>(index(cell))]);
      crit.push_back({{"criterion", std::string(criterion_name(cr.criterion))},
                      {"gps", gps_bw_json(cr.gps_bandwidth)},
                      {"outcome", o},
                      {"dr", er(cr.dr)},
                      {"sz", er(cr.sz)},
                      {"test_ok", cr.test_ok},
                      {"statistic", cr.test.statistic},
                      {"p_value", cr.test.p_value},
                      {"bias_decomposition", cr.bias_decomposition},
                      {"rho", cr.rho},
                      {"truncated", cr.truncated},
                      {"not_converged", cr.not_converged}});
    }
    x["criteria"] = crit;
    recs.push_back(x);
  }
  j["records"] = recs;
  return j;
}

}  // namespace didcc
