#include "didcc/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "didcc/error.hpp"

namespace didcc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = std::sqrt(lo * hi);
    return out;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) out[k] = std::exp(a + step * static_cast<double>(k));
  return out;
}

std::vector<DiscreteKernelParams> symmetric_lambdas(std::initializer_list<double> values) {
  std::vector<DiscreteKernelParams> out;
  for (double v : values) out.push_back({v, v});
  return out;
}

std::string describe_grid(const BandwidthConfig& c) {
  std::ostringstream os;
  os << c.h_grid.size() << " h x " << c.lambda_grid.size() << " lambda PS candidates, " << c.b_grid.size() << " b x "
     << c.theta_grid.size() << " theta outcome candidates";
  return os.str();
}

}  // namespace

std::string_view criterion_name(CvCriterion c) { return c == CvCriterion::LeastSquares ? "ls" : "ml"; }

CvCriterion parse_criterion(std::string_view name) {
  if (name == "ls" || name == "LS") return CvCriterion::LeastSquares;
  if (name == "ml" || name == "ML") return CvCriterion::LocalLikelihood;
  throw ParameterError("unknown cross-validation criterion '" + std::string(name) + "'");
}

void BandwidthConfig::validate() const {
  if (h_grid.empty() || lambda_grid.empty() || b_grid.empty() || theta_grid.empty()) {
    throw ParameterError("bandwidth grids must be non-empty");
  }
  auto positive = [](const std::vector<double>& g) {
    return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
  };
  if (!positive(h_grid) || !positive(b_grid)) throw ParameterError("continuous bandwidths must be positive");
  for (const auto& l : lambda_grid) l.validate();
  for (const auto& l : theta_grid) l.validate();
  if (ps_order < 0 || or_order < 0) throw ParameterError("polynomial orders must be nonnegative");
  if (or_cells.empty()) throw ParameterError("at least one outcome cell is required");
}

double reference_bandwidth(const Dataset& data) {
  const std::size_t dim = data.layout().continuous;
  const std::size_t n = data.size();
  double sd = 1.0;
  if (dim > 0 && n > 1) {
    sd = 0.0;
    for (std::size_t s = 0; s < dim; ++s) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += data.x_c(i)[s];
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += (data.x_c(i)[s] - mean) * (data.x_c(i)[s] - mean);
      sd += std::sqrt(ss / static_cast<double>(n - 1));
    }
    sd /= static_cast<double>(dim);
    if (!(sd > 0.0)) sd = 1.0;
  }
  return sd * std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), -1.0 / (static_cast<double>(dim) + 4.0));
}

BandwidthConfig default_bandwidth_config(const Dataset& data, std::size_t points) {
  if (points == 0) throw ParameterError("grid must have at least one point");
  const double ref = reference_bandwidth(data);
  BandwidthConfig c;
  c.h_grid = log_spaced(0.2 * ref, 20.0 * ref, points);
  c.b_grid = c.h_grid;
  c.lambda_grid = symmetric_lambdas({0.0, 0.25, 0.5, 0.75, 1.0});
  c.theta_grid = c.lambda_grid;
  return c;
}

BandwidthConfig coarse_bandwidth_config(const Dataset& data) {
  const double ref = reference_bandwidth(data);
  BandwidthConfig c;
  c.h_grid = log_spaced(0.5 * ref, 10.0 * ref, 4);
  c.b_grid = log_spaced(0.5 * ref, 5.0 * ref, 8);
  c.lambda_grid = symmetric_lambdas({0.5});
  c.theta_grid = symmetric_lambdas({0.25, 0.5, 0.75});
  return c;
}

double cv_ps_block(const Dataset& data, const Eigen::MatrixXd& probabilities, CvCriterion criterion) {
  const std::size_t n = data.size();
  if (static_cast<std::size_t>(probabilities.rows()) != n || probabilities.cols() != 4) {
    throw ShapeError("probability matrix must be n x 4");
  }
  if (!probabilities.allFinite()) return kInf;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int own = index(data.cell(i));
    for (int c = 0; c < 4; ++c) {
      const double p = probabilities(static_cast<Eigen::Index>(i), c);
      if (criterion == CvCriterion::LeastSquares) {
        const double r = (c == own ? 1.0 : 0.0) - p;
        total += r * r;
      } else if (c == own) {
        total -= std::log(std::max(p, kLikelihoodFloor));
      }
    }
  }
  const double value = total / static_cast<double>(n);
  return std::isfinite(value) ? value : kInf;
}

double cv_or_block(const Dataset& data, const OrCellFit& fit) {
  const std::size_t n = data.size();
  if (static_cast<std::size_t>(fit.loo_means.size()) != n) throw ShapeError("outcome fit length must equal n");
  if (!fit.all_finite()) return kInf;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.cell(i) != fit.cell) continue;
    const double r = data.y(i) - fit.loo_means[static_cast<Eigen::Index>(i)];
    total += r * r;
  }
  return total / static_cast<double>(n);
}

namespace {

double criterion_total(const Dataset& data, const GpsFit& gps, const OrFit& or_fit, CvCriterion c) {
  double value = cv_ps_block(data, gps.probabilities, c);
  for (Cell cell : kAllCells) {
    if (or_fit.has(cell)) value += cv_or_block(data, or_fit.at(cell));
  }
  return std::isfinite(value) ? value : kInf;
}

}  // namespace

double cv_criterion_ls(const Dataset& data, const GpsFit& gps, const OrFit& or_fit) {
  return criterion_total(data, gps, or_fit, CvCriterion::LeastSquares);
}

double cv_criterion_ml(const Dataset& data, const GpsFit& gps, const OrFit& or_fit) {
  return criterion_total(data, gps, or_fit, CvCriterion::LocalLikelihood);
}

CrossValidation::CrossValidation(const Dataset& data, BandwidthConfig config, LocalFitOptions options)
    : config_(std::move(config)) {
  config_.validate();
  config_.h_grid = sorted_unique(config_.h_grid);
  config_.b_grid = sorted_unique(config_.b_grid);
  config_.lambda_grid = sorted_unique(config_.lambda_grid);
  config_.theta_grid = sorted_unique(config_.theta_grid);
  config_.or_cells = sorted_unique(config_.or_cells);

  const MultiIndexBasis ps_basis(config_.ps_order, data.layout().continuous);
  const MultiIndexBasis or_basis(config_.or_order, data.layout().continuous);

  // Candidates are enumerated in (h, lambda) lexicographic order so the first
  // strict minimum is the tie-breaking winner.
  for (double h : config_.h_grid) {
    for (const auto& lambda : config_.lambda_grid) {
      const GpsBandwidth bw{h, lambda};
      GpsFit fit = fit_local_mlogit_loo(data, ps_basis, bw, options);
      PsTraceEntry entry{bw, cv_ps_block(data, fit.probabilities, CvCriterion::LeastSquares),
                         cv_ps_block(data, fit.probabilities, CvCriterion::LocalLikelihood)};
      ps_trace_.push_back(entry);
      gps_fits_.push_back(std::move(fit));
    }
  }
  for (double b : config_.b_grid) {
    for (const auto& theta : config_.theta_grid) {
      const OrBandwidth bw{b, theta};
      OrFit fit = fit_local_ls_loo(data, config_.or_cells, or_basis, bw, options);
      OrTraceEntry entry{bw, {}};
      for (Cell c : config_.or_cells) entry.value[static_cast<std::size_t>(index(c))] = cv_or_block(data, fit.at(c));
      or_trace_.push_back(entry);
      or_fits_.push_back(std::move(fit));
    }
  }
}

SelectedBandwidths CrossValidation::select(CvCriterion criterion) const {
  SelectedBandwidths s;
  s.criterion = criterion;
  s.or_cells = config_.or_cells;
  s.ps_trace = ps_trace_;
  s.or_trace = or_trace_;

  double best = kInf;
  std::optional<std::size_t> arg;
  for (std::size_t k = 0; k < ps_trace_.size(); ++k) {
    const double v = ps_trace_[k].value(criterion);
    if (v < best) {
      best = v;
      arg = k;
    }
  }
  if (!arg) {
    throw SelectionError("every propensity-score bandwidth candidate gave a non-finite criterion (" +
                         describe_grid(config_) + ")");
  }
  s.ps_index = *arg;
  s.ps_value = best;
  s.gps = ps_trace_[*arg].bandwidth;

  auto argmin_or = [&](auto&& value_of, std::string_view what) {
    double b = kInf;
    std::optional<std::size_t> a;
    for (std::size_t k = 0; k < or_trace_.size(); ++k) {
      const double v = value_of(or_trace_[k]);
      if (v < b) {
        b = v;
        a = k;
      }
    }
    if (!a) {
      throw SelectionError("every outcome bandwidth candidate gave a non-finite criterion for " + std::string(what) +
                           " (" + describe_grid(config_) + ")");
    }
    return *a;
  };

  if (config_.share_or_bandwidths) {
    const std::size_t k = argmin_or(
        [&](const OrTraceEntry& e) {
          double v = 0.0;
          for (Cell c : config_.or_cells) v += e.value[static_cast<std::size_t>(index(c))];
          return v;
        },
        "the shared outcome bandwidth");
    for (Cell c : config_.or_cells) s.or_index[static_cast<std::size_t>(index(c))] = k;
  } else {
    for (Cell c : config_.or_cells) {
      const auto ci = static_cast<std::size_t>(index(c));
      s.or_index[ci] = argmin_or([&](const OrTraceEntry& e) { return e.value[ci]; }, "cell " + std::string(cell_name(c)));
    }
  }

  s.criterion_value = s.ps_value;
  for (Cell c : config_.or_cells) {
    const auto ci = static_cast<std::size_t>(index(c));
    s.outcome[ci] = or_trace_[s.or_index[ci]].bandwidth;
    s.or_value[ci] = or_trace_[s.or_index[ci]].value[ci];
    s.criterion_value += s.or_value[ci];
  }
  return s;
}

OrFit CrossValidation::or_fit(const SelectedBandwidths& s) const {
  OrFit out;
  for (Cell c : s.or_cells) out.set(or_fits_[s.or_index[static_cast<std::size_t>(index(c))]].at(c));
  return out;
}

SelectedBandwidths select_bandwidths(const Dataset& data, const BandwidthConfig& config,
                                     const LocalFitOptions& options) {
  return CrossValidation(data, config, options).select();
}

}  // namespace didcc
