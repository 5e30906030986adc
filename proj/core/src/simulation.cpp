#include "didcc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "didcc/error.hpp"
#include "didcc/parallel.hpp"
#include "didcc/stats.hpp"

namespace didcc {

Design parse_design(int id) {
  if (id == 1) return Design::NonStationary;
  if (id == 2) return Design::Stationary;
  throw ConfigError("design must be 1 or 2");
}

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

int binomial3(std::mt19937_64& rng) {
  std::binomial_distribution<int> b(3, 0.5);
  return b(rng);
}

// Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::vector<double> node;
  std::vector<double> weight;
};

Rule gauss_legendre(int m) {
  Rule r;
  r.node.resize(static_cast<std::size_t>(m));
  r.weight.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.node[static_cast<std::size_t>(i)] = x;
    r.weight[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Calls fn(weight, x) over a product rule whose weights integrate the covariate law.
void quadrature(const std::function<void(double, const Covariates&)>& fn) {
  static const Rule rule = gauss_legendre(60);
  static constexpr double kBinom[4] = {1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8};
  Covariates x;
  for (int x3 = 0; x3 < 2; ++x3) {
    for (int x4 = 0; x4 < 2; ++x4) {
      for (int x5 = 0; x5 < 4; ++x5) {
        for (int x6 = 0; x6 < 4; ++x6) {
          const double pd = 0.25 * kBinom[x5] * kBinom[x6];
          x.k = {x3, x4, x5, x6};
          for (std::size_t a = 0; a < rule.node.size(); ++a) {
            for (std::size_t b = 0; b < rule.node.size(); ++b) {
              x.c = {rule.node[a], rule.node[b]};
              fn(pd * 0.25 * rule.weight[a] * rule.weight[b], x);
            }
          }
        }
      }
    }
  }
}

std::array<double, 4> design_one(const Covariates& x) {
  const double f10 = f_ps_10(x);
  const double f01 = f_ps_01(x);
  const double f00 = f_ps_00(x);
  const double mx = std::max({0.0, f10, f01, f00});
  const double e11 = std::exp(-mx);
  const double e10 = std::exp(f10 - mx);
  const double e01 = std::exp(f01 - mx);
  const double e00 = std::exp(f00 - mx);
  const double s = e11 + e10 + e01 + e00;
  std::array<double, 4> p{};
  p[index(Cell::k11)] = e11 / s;
  p[index(Cell::k10)] = e10 / s;
  p[index(Cell::k01)] = e01 / s;
  p[index(Cell::k00)] = e00 / s;
  return p;
}

// First and second moments needed by the population quantities.
struct Moments {
  double w = 0.0;
  double p11 = 0.0, p11_fa = 0.0, p11_fa2 = 0.0;
  double pt = 0.0, pt_fa = 0.0, pt_fa2 = 0.0;
  double t1 = 0.0;
  double inv10 = 0.0, inv01 = 0.0, inv00 = 0.0;  // p11^2 / p_c
  double odds = 0.0;                            // pt^2 / (1 - pt)

  void add(double w8, const std::array<double, 4>& p, double fa) {
    const double p11v = p[index(Cell::k11)];
    const double ptv = p11v + p[index(Cell::k10)];
    w += w8;
    p11 += w8 * p11v;
    p11_fa += w8 * p11v * fa;
    p11_fa2 += w8 * p11v * fa * fa;
    pt += w8 * ptv;
    pt_fa += w8 * ptv * fa;
    pt_fa2 += w8 * ptv * fa * fa;
    t1 += w8 * (p11v + p[index(Cell::k01)]);
    inv10 += w8 * p11v * p11v / p[index(Cell::k10)];
    inv01 += w8 * p11v * p11v / p[index(Cell::k01)];
    inv00 += w8 * p11v * p11v / p[index(Cell::k00)];
    odds += w8 * ptv * ptv / (1.0 - ptv);
  }

  Moments normalised() const {
    Moments m = *this;
    for (double* v : {&m.p11, &m.p11_fa, &m.p11_fa2, &m.pt, &m.pt_fa, &m.pt_fa2, &m.t1, &m.inv10, &m.inv01, &m.inv00,
                      &m.odds}) {
      *v /= w;
    }
    m.w = 1.0;
    return m;
  }
};

double att_from(const Moments& m) { return m.p11_fa / m.p11; }

EfficiencyBounds bounds_from(const Moments& m, double sigma2) {
  EfficiencyBounds b;
  const double att = att_from(m);
  const double spread = m.p11_fa2 - 2.0 * att * m.p11_fa + att * att * m.p11;
  b.robust = (sigma2 * m.p11 + spread + sigma2 * (m.inv10 + m.inv01 + m.inv00)) / (m.p11 * m.p11);

  const double ed = m.pt;
  const double efa = m.pt_fa / ed;
  const double var_num = m.pt_fa2 - 2.0 * efa * m.pt_fa + efa * efa * ed;  // E[pt (fa - efa)^2]
  b.stationary = var_num / (ed * ed);
  for (double pt_share : {m.t1, 1.0 - m.t1}) {
    b.stationary += sigma2 / (ed * pt_share) + sigma2 * m.odds / (pt_share * ed * ed);
  }
  b.rho = (1.0 - m.t1) / (ed * m.t1) * (var_num / ed);
  return b;
}

Moments mc_moments(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw ParameterError("oracle integration needs at least one draw");
  auto rng = seeded(seed);
  Moments m;
  for (std::size_t i = 0; i < draws; ++i) {
    const Covariates x = draw_covariates(rng);
    m.add(1.0, oracle_probabilities(spec.design, x), oracle_effect(spec, x));
  }
  return m.normalised();
}

Moments exact_moments(const DgpSpec& spec) {
  Moments m;
  quadrature([&](double w, const Covariates& x) { m.add(w, oracle_probabilities(spec.design, x), oracle_effect(spec, x)); });
  return m.normalised();
}

}  // namespace

Covariates draw_covariates(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution b(0.5);
  Covariates x;
  x.c[0] = u(rng);
  x.c[1] = u(rng);
  x.k[0] = b(rng) ? 1 : 0;
  x.k[1] = b(rng) ? 1 : 0;
  x.k[2] = binomial3(rng);
  x.k[3] = binomial3(rng);
  return x;
}

Covariates covariates_of(const Dataset& data, std::size_t i) {
  const auto& l = data.layout();
  if (l.continuous != 2 || l.unordered != 2 || l.ordered != 2) {
    throw ShapeError("simulation covariates need 2 continuous, 2 unordered and 2 ordered columns");
  }
  Covariates x;
  x.c = {data.x_c(i)[0], data.x_c(i)[1]};
  x.k = {data.x_u(i)[0], data.x_u(i)[1], data.x_o(i)[0], data.x_o(i)[1]};
  return x;
}

double f_ps_10(const Covariates& x) {
  const double x1 = x.x(1), x2 = x.x(2), x3 = x.x(3), x4 = x.x(4), x5 = x.x(5), x6 = x.x(6);
  const double disc = x3 + x4 + x5 + x6;
  return 0.4 * (x1 - x1 * x1 + x2 - x2 * x2) + 0.2 * disc +
         0.1 * (x3 * x4 - x5 * x6 + x1 * disc - x2 * disc + x3 * x5 - x3 * x6 - x4 * x5 + x4 * x6);
}

double f_ps_01(const Covariates& x) {
  const double x1 = x.x(1), x2 = x.x(2), x3 = x.x(3), x4 = x.x(4), x5 = x.x(5), x6 = x.x(6);
  return 0.4 * (2.0 * x1 + x2 + x1 * x1 - x2 * x2 + x1 * x2) + 0.2 * (x3 - x4 + x5 - x6) +
         0.1 * (x2 * (x3 + x4 + x5 + x6) + x3 * x6 + x4 * x6);
}

double f_ps_00(const Covariates& x) {
  const double x1 = x.x(1), x2 = x.x(2), x3 = x.x(3), x4 = x.x(4), x5 = x.x(5), x6 = x.x(6);
  return 0.4 * (x1 + 2.0 * x2 - x1 * x1 + x2 * x2 - x1 * x2) + 0.2 * (-x3 + x4 - x5 + x6) +
         0.1 * (x1 * (x3 + x4 + x5 + x6) + x3 * x5 + x4 * x5);
}

double f_base(const Covariates& x) {
  const double x1 = x.x(1), x2 = x.x(2);
  return 27.4 * x1 + 27.4 * x2 + 13.7 * x1 * x1 + 13.7 * x2 * x2 + 13.7 * x1 * x2;
}

double f_att(const Covariates& x) {
  return 27.4 * x.x(1) + 13.7 * x.x(2) + 6.85 * (x.x(3) + x.x(4) + x.x(5) + x.x(6)) - 15.0;
}

double period_one_share() {
  static const double share = [] {
    double s = 0.0;
    quadrature([&](double w, const Covariates& x) {
      const auto p = design_one(x);
      s += w * (p[index(Cell::k11)] + p[index(Cell::k01)]);
    });
    return s;
  }();
  return share;
}

std::array<double, 4> oracle_probabilities(Design design, const Covariates& x) {
  const auto p1 = design_one(x);
  if (design == Design::NonStationary) return p1;
  const double pt1 = period_one_share();
  const double treated = p1[index(Cell::k11)] + p1[index(Cell::k10)];
  const double control = p1[index(Cell::k01)] + p1[index(Cell::k00)];
  std::array<double, 4> p{};
  p[index(Cell::k11)] = pt1 * treated;
  p[index(Cell::k10)] = (1.0 - pt1) * treated;
  p[index(Cell::k01)] = pt1 * control;
  p[index(Cell::k00)] = (1.0 - pt1) * control;
  return p;
}

double oracle_effect(const DgpSpec& spec, const Covariates& x) {
  return spec.constant_effect ? *spec.constant_effect : f_att(x);
}

double oracle_mean(const DgpSpec& spec, Cell cell, const Covariates& x) {
  const double fb = f_base(x);
  const double fh = fb;
  switch (cell) {
    case Cell::k11: return 210.0 + 2.0 * fb + fh + oracle_effect(spec, x);
    case Cell::k10: return 210.0 + fb + fh;
    case Cell::k01: return 210.0 + 2.0 * fb;
    case Cell::k00: return 210.0 + fb;
  }
  return 0.0;
}

double oracle_residual_variance(const DgpSpec& spec) { return 1.0 + spec.noise_scale * spec.noise_scale; }

std::vector<Sample> draw_sample(const DgpSpec& spec) {
  if (spec.n < 1) throw ParameterError("sample size must be positive");
  if (!(spec.noise_scale >= 0.0)) throw ParameterError("noise scale must be nonnegative");
  auto rng = seeded(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> out(spec.n);
  for (auto& s : out) {
    const Covariates x = draw_covariates(rng);
    const auto p = oracle_probabilities(spec.design, x);
    const double u = unif(rng);
    const double c10 = p[index(Cell::k10)];
    const double c01 = c10 + p[index(Cell::k01)];
    const double c00 = 1.0 - p[index(Cell::k11)];
    Cell cell = Cell::k11;
    if (u <= c10) {
      cell = Cell::k10;
    } else if (u <= c01) {
      cell = Cell::k01;
    } else if (u <= c00) {
      cell = Cell::k00;
    }
    const int d = treatment_of(cell);
    const int t = period_of(cell);
    const double fb = f_base(x);
    const double eps_het = d * fb + normal(rng);
    const double eps = spec.noise_scale * normal(rng);
    double y = 210.0 + eps_het + eps;
    if (t == 0) {
      y += fb;
    } else {
      y += 2.0 * fb + (d == 1 ? oracle_effect(spec, x) : 0.0);
    }
    s.y = y;
    s.d = d;
    s.t = t;
    s.x_c = {x.c[0], x.c[1]};
    s.x_u = {x.k[0], x.k[1]};
    s.x_o = {x.k[2], x.k[3]};
  }
  return out;
}

Dataset draw_dataset(const DgpSpec& spec) {
  const auto samples = draw_sample(spec);
  return Dataset::from_samples(samples);
}

GpsFit oracle_gps_fit(const DgpSpec& spec, const Dataset& data) {
  const std::size_t n = data.size();
  GpsFit fit;
  fit.probabilities.resize(static_cast<Eigen::Index>(n), 4);
  fit.gamma.assign(n, Eigen::VectorXd());
  fit.converged.assign(n, 1);
  fit.ridge.assign(n, 0);
  fit.fallback.assign(n, 0);
  fit.truncated.assign(n, 0);
  fit.window_counts.assign(n, n);
  fit.order = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = oracle_probabilities(spec.design, covariates_of(data, i));
    for (int c = 0; c < 4; ++c) fit.probabilities(static_cast<Eigen::Index>(i), c) = p[static_cast<std::size_t>(c)];
  }
  return fit;
}

OrFit oracle_or_fit(const DgpSpec& spec, const Dataset& data) {
  const std::size_t n = data.size();
  OrFit out;
  for (Cell c : kAllCells) {
    OrCellFit f;
    f.cell = c;
    f.order = 0;
    f.loo_means.resize(static_cast<Eigen::Index>(n));
    f.beta.assign(n, Eigen::VectorXd());
    f.effective_counts.assign(n, n);
    f.ridge.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) f.loo_means[static_cast<Eigen::Index>(i)] = oracle_mean(spec, c, covariates_of(data, i));
    out.set(std::move(f));
  }
  return out;
}

double true_att(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  if (spec.constant_effect) return *spec.constant_effect;
  return att_from(mc_moments(spec, draws, seed));
}

EfficiencyBounds efficiency_bounds(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  return bounds_from(mc_moments(spec, draws, seed), oracle_residual_variance(spec));
}

double efficiency_bound(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  const auto b = efficiency_bounds(spec, draws, seed);
  return spec.design == Design::NonStationary ? b.robust : b.stationary;
}

double true_att_exact(const DgpSpec& spec) {
  if (spec.constant_effect) return *spec.constant_effect;
  return att_from(exact_moments(spec));
}

EfficiencyBounds efficiency_bounds_exact(const DgpSpec& spec) {
  return bounds_from(exact_moments(spec), oracle_residual_variance(spec));
}

// ---------------------------------------------------------------------------

std::uint64_t replication_seed(std::uint64_t master, std::size_t index) {
  auto rng = seeded(master, static_cast<std::uint64_t>(index) + 1);
  return rng();
}

namespace {

EstimateRecord record_of(const AttEstimate& e) { return {e.tau_hat, e.omega_hat, e.ci_low, e.ci_high}; }

}  // namespace

ReplicationRecord run_replication(const McConfig& config, std::size_t index) {
  ReplicationRecord rec;
  rec.index = index;
  DgpSpec spec = config.dgp;
  spec.seed = replication_seed(config.seed, index);
  try {
    const Dataset data = draw_dataset(spec);
    if (config.twfe) {
      rec.twfe_linear = record_of(att_twfe(data, TwfeSpec::Linear, config.level));
      rec.twfe_saturated = record_of(att_twfe(data, TwfeSpec::Saturated, config.level));
    }
    BandwidthConfig bw = config.grid == GridMode::Coarse ? coarse_bandwidth_config(data) : default_bandwidth_config(data);
    bw.ps_order = config.ps_order;
    bw.or_order = config.or_order;
    LocalFitOptions options;
    options.workers = 1;
    const CrossValidation cv(data, bw, options);
    for (CvCriterion crit : config.criteria) {
      const SelectedBandwidths sel = cv.select(crit);
      const GpsFit gps = predict_gps(cv.gps_fit(sel), config.truncation_floor);
      const OrFit ors = cv.or_fit(sel);
      CriterionRecord cr;
      cr.criterion = crit;
      cr.gps_bandwidth = sel.gps;
      cr.or_bandwidths = sel.outcome;
      const AttEstimate dr = att_dr(data, gps, ors, config.level);
      const AttEstimate sz = att_sz(data, gps, ors, config.level);
      cr.dr = record_of(dr);
      cr.sz = record_of(sz);
      try {
        cr.test = hausman_test(dr, sz);
        cr.test_ok = true;
      } catch (const DegenerateTestError&) {
        cr.test_ok = false;
      }
      cr.bias_decomposition = bias_decomposition(data, ors);
      cr.rho = efficiency_loss_rho(data, ors);
      cr.truncated = gps.truncated_count();
      cr.not_converged = gps.size() - gps.converged_count();
      rec.criteria.push_back(cr);
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.criteria.clear();
  }
  return rec;
}

namespace {

EstimatorSummary summarise_estimates(std::string name, std::string label, const std::vector<EstimateRecord>& v,
                                     double truth) {
  EstimatorSummary s;
  s.estimator = std::move(name);
  s.label = std::move(label);
  s.count = v.size();
  if (v.empty()) return s;
  std::vector<double> bias;
  double sq = 0.0;
  double var = 0.0;
  double cover = 0.0;
  double len = 0.0;
  for (const auto& e : v) {
    bias.push_back(e.tau_hat - truth);
    sq += (e.tau_hat - truth) * (e.tau_hat - truth);
    var += e.omega_hat;
    cover += (e.ci_low <= truth && truth <= e.ci_high) ? 1.0 : 0.0;
    len += e.ci_high - e.ci_low;
  }
  const double m = static_cast<double>(v.size());
  s.avg_bias = mean(bias);
  s.med_bias = median(bias);
  s.rmse = std::sqrt(sq / m);
  s.avg_asy_var = var / m;
  s.coverage = cover / m;
  s.avg_ci_length = len / m;
  return s;
}

}  // namespace

McReport summarize(const McConfig& config, std::vector<ReplicationRecord> records, double truth, double seb) {
  McReport r;
  r.design = config.dgp.design;
  r.n = config.dgp.n;
  r.replications = config.replications;
  r.seed = config.seed;
  r.true_att = truth;
  r.seb = seb;
  r.records = std::move(records);

  std::vector<EstimateRecord> lin, sat;
  for (const auto& rec : r.records) {
    if (!rec.ok) {
      ++r.failures;
      continue;
    }
    lin.push_back(rec.twfe_linear);
    sat.push_back(rec.twfe_saturated);
  }
  if (config.twfe) {
    r.estimators.push_back(summarise_estimates("twfe", "Linear", lin, truth));
    r.estimators.push_back(summarise_estimates("twfe", "Saturated", sat, truth));
  }
  for (const char* kind : {"dr", "sz"}) {
    for (std::size_t k = 0; k < config.criteria.size(); ++k) {
      std::vector<EstimateRecord> v;
      for (const auto& rec : r.records) {
        if (rec.ok) v.push_back(std::string_view(kind) == "dr" ? rec.criteria[k].dr : rec.criteria[k].sz);
      }
      std::string label(criterion_name(config.criteria[k]));
      std::transform(label.begin(), label.end(), label.begin(), [](unsigned char ch) { return std::toupper(ch); });
      r.estimators.push_back(summarise_estimates(kind, label, v, truth));
    }
  }
  for (std::size_t k = 0; k < config.criteria.size(); ++k) {
    TestSummary t;
    t.label = std::string(criterion_name(config.criteria[k]));
    std::transform(t.label.begin(), t.label.end(), t.label.begin(), [](unsigned char ch) { return std::toupper(ch); });
    double stat = 0.0;
    std::array<double, 3> rej{};
    for (const auto& rec : r.records) {
      if (!rec.ok) continue;
      const auto& cr = rec.criteria[k];
      if (!cr.test_ok) {
        ++t.degenerate;
        continue;
      }
      ++t.count;
      stat += cr.test.statistic;
      for (std::size_t a = 0; a < 3; ++a) rej[a] += cr.test.reject[a] ? 1.0 : 0.0;
    }
    if (t.count > 0) {
      t.avg_statistic = stat / static_cast<double>(t.count);
      for (std::size_t a = 0; a < 3; ++a) t.rejection[a] = rej[a] / static_cast<double>(t.count);
    }
    r.tests.push_back(t);
  }
  return r;
}

McReport run_monte_carlo(const McConfig& config) {
  if (config.replications < 1) throw ParameterError("at least one replication is required");
  if (config.criteria.empty()) throw ParameterError("at least one cross-validation criterion is required");
  std::vector<ReplicationRecord> records(config.replications);
  parallel_for(config.replications, config.workers,
               [&](std::size_t r) { records[r] = run_replication(config, r); });
  const double truth = true_att_exact(config.dgp);
  const auto bounds = efficiency_bounds_exact(config.dgp);
  const double seb = config.dgp.design == Design::NonStationary ? bounds.robust : bounds.stationary;
  return summarize(config, std::move(records), truth, seb);
}

const EstimatorSummary& McReport::estimator(std::string_view name, std::string_view label) const {
  for (const auto& e : estimators) {
    if (e.estimator == name && e.label == label) return e;
  }
  throw ParameterError("no summary for estimator " + std::string(name) + " / " + std::string(label));
}

const TestSummary& McReport::test(std::string_view label) const {
  for (const auto& t : tests) {
    if (t.label == label) return t;
  }
  throw ParameterError("no test summary for " + std::string(label));
}

std::string format_report(const McReport& r) {
  std::ostringstream os;
  os << std::fixed;
  const bool stationary = r.design == Design::Stationary;
  os << "Monte Carlo results " << (stationary ? "under no compositional changes" : "under compositional changes")
     << ". Sample size: n = " << r.n << ". Replications: " << r.replications << " (failed: " << r.failures << ").\n";
  os << std::setprecision(2) << "True value of ATT: " << r.true_att << ". Semiparametric Efficiency Bound: "
     << std::setprecision(1) << r.seb << "\n\n";
  auto header = [&](const char* first) {
    os << std::left << std::setw(10) << "" << std::setw(11) << first << std::right << std::setw(11) << "Avg. Bias"
       << std::setw(11) << "Med. Bias" << std::setw(10) << "RMSE" << std::setw(12) << "Asy. Var." << std::setw(8)
       << "Cover." << std::setw(9) << "CIL" << "\n";
  };
  auto row = [&](const EstimatorSummary& e, const char* name) {
    os << std::left << std::setw(10) << name << std::setw(11) << e.label << std::right << std::setprecision(3)
       << std::setw(11) << e.avg_bias << std::setw(11) << e.med_bias << std::setw(10) << e.rmse << std::setw(12)
       << e.avg_asy_var << std::setw(8) << e.coverage << std::setw(9) << e.avg_ci_length << "\n";
  };
  bool twfe = false;
  for (const auto& e : r.estimators) twfe = twfe || e.estimator == "twfe";
  if (twfe) {
    os << "Two-way Fixed Effect Estimators\n";
    header("Spec.");
    for (const auto& e : r.estimators) {
      if (e.estimator == "twfe") row(e, "tau_fe");
    }
    os << "\n";
  }
  os << "Nonparametric Doubly Robust DiD Estimators for the ATT\n";
  header("CV Crit.");
  for (const auto& e : r.estimators) {
    if (e.estimator == "dr") row(e, "tau_dr");
  }
  for (const auto& e : r.estimators) {
    if (e.estimator == "sz") row(e, "tau_sz");
  }
  os << "\nHausman-type test\n";
  const char* what = stationary ? "Emp. Size" : "Emp. Pow.";
  os << std::left << std::setw(10) << "" << std::setw(11) << "CV Crit." << std::right << std::setw(17)
     << "Avg. Test Stats.";
  for (double a : kTestLevels) {
    std::ostringstream lab;
    lab << what << " (" << std::setprecision(2) << std::fixed << a << ")";
    os << std::setw(19) << lab.str();
  }
  os << "\n";
  for (const auto& t : r.tests) {
    os << std::left << std::setw(10) << "" << std::setw(11) << t.label << std::right << std::setprecision(3)
       << std::setw(17) << t.avg_statistic;
    for (double v : t.rejection) os << std::setw(19) << v;
    if (t.degenerate > 0) os << "  (degenerate: " << t.degenerate << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace didcc
