#include "didcc/localpoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "didcc/error.hpp"
#include "didcc/parallel.hpp"

namespace didcc {

namespace {

constexpr double kRidgeScale = 1e-8;
constexpr double kMinReciprocalCondition = 1e-12;

// Observations with positive kernel weight around one centre.
struct Window {
  Eigen::MatrixXd z;  // basis size x m
  Eigen::VectorXd w;
  Eigen::VectorXd y;
  std::vector<int> cell;
  std::size_t used = 0;  // observations considered (denominator of the objective)
};

struct WindowRequest {
  const Dataset* data = nullptr;
  const CovariatePoint* center = nullptr;
  std::optional<std::size_t> exclude;
  const MultiIndexBasis* basis = nullptr;
  const MixedKernel* kernel = nullptr;
  const WeightMatrix* cache = nullptr;  // only valid when the centre is observation `exclude`
};

template <class Accept>
Window gather(const WindowRequest& req, Accept&& accept) {
  const Dataset& data = *req.data;
  const std::size_t n = data.size();
  std::vector<std::pair<std::size_t, double>> hits;
  hits.reserve(n);
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (req.exclude && *req.exclude == i) continue;
    ++used;
    if (!accept(i)) continue;
    const double w = req.cache != nullptr ? (*req.cache)(i, *req.exclude) : (*req.kernel)(data.point(i), *req.center);
    if (w > 0.0) hits.emplace_back(i, w);
  }
  Window win;
  win.used = used;
  const auto m = static_cast<Eigen::Index>(hits.size());
  const auto p = static_cast<Eigen::Index>(req.basis->size());
  win.z.resize(p, m);
  win.w.resize(m);
  win.y.resize(m);
  win.cell.resize(hits.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::size_t i = hits[static_cast<std::size_t>(k)].first;
    req.basis->fill(data.x_c(i), req.center->continuous, win.z.col(k));
    win.w[k] = hits[static_cast<std::size_t>(k)].second;
    win.y[k] = data.y(i);
    win.cell[static_cast<std::size_t>(k)] = index(data.cell(i));
  }
  return win;
}

// Weighted local log-likelihood over a window; derivatives optional.
LikelihoodDerivatives window_objective(const Window& win, const Eigen::VectorXd& gamma, double scale,
                                       bool derivatives) {
  const Eigen::Index p = win.z.rows();
  const Eigen::Index m = win.z.cols();
  Eigen::Map<const Eigen::MatrixXd> g(gamma.data(), p, 3);
  const Eigen::MatrixXd eta = g.transpose() * win.z;  // 3 x m

  LikelihoodDerivatives out;
  Eigen::MatrixXd resid;
  Eigen::MatrixXd curv;  // rows: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
  if (derivatives) {
    resid.resize(3, m);
    curv.resize(6, m);
  }
  double value = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e0 = eta(0, i);
    const double e1 = eta(1, i);
    const double e2 = eta(2, i);
    const double mx = std::max({0.0, e0, e1, e2});
    const double x0 = std::exp(e0 - mx);
    const double x1 = std::exp(e1 - mx);
    const double x2 = std::exp(e2 - mx);
    const double s = std::exp(-mx) + x0 + x1 + x2;
    const double log_den = mx + std::log(s);
    const int c = win.cell[static_cast<std::size_t>(i)];
    const double idx = c == 0 ? 0.0 : eta(c - 1, i);
    const double wi = win.w[i] * scale;
    value += wi * (idx - log_den);
    if (derivatives) {
      const double pi[3] = {x0 / s, x1 / s, x2 / s};
      for (int k = 0; k < 3; ++k) resid(k, i) = wi * (((c - 1) == k ? 1.0 : 0.0) - pi[k]);
      curv(0, i) = wi * pi[0] * (1.0 - pi[0]);
      curv(1, i) = -wi * pi[0] * pi[1];
      curv(2, i) = -wi * pi[0] * pi[2];
      curv(3, i) = wi * pi[1] * (1.0 - pi[1]);
      curv(4, i) = -wi * pi[1] * pi[2];
      curv(5, i) = wi * pi[2] * (1.0 - pi[2]);
    }
  }
  out.value = value;
  if (!derivatives) return out;

  out.gradient.resize(3 * p);
  for (int k = 0; k < 3; ++k) out.gradient.segment(k * p, p) = win.z * resid.row(k).transpose();
  out.hessian.resize(3 * p, 3 * p);
  const int pairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (int r = 0; r < 6; ++r) {
    const int k = pairs[r][0];
    const int l = pairs[r][1];
    const Eigen::MatrixXd block = -(win.z * curv.row(r).transpose().asDiagonal() * win.z.transpose());
    out.hessian.block(k * p, l * p, p, p) = block;
    if (k != l) out.hessian.block(l * p, k * p, p, p) = block.transpose();
  }
  return out;
}

Eigen::VectorXd initial_gamma(const Dataset& data, std::optional<std::size_t> exclude, std::size_t p) {
  auto counts = data.cell_counts();
  if (exclude) --counts[static_cast<std::size_t>(index(data.cell(*exclude)))];
  auto c = [&](Cell cell) { return std::max(0.5, static_cast<double>(counts[static_cast<std::size_t>(index(cell))])); };
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * p));
  const double ref = c(Cell::k11);
  for (int k = 0; k < 3; ++k) {
    gamma[static_cast<Eigen::Index>(k * p)] = std::log(c(kControlCells[static_cast<std::size_t>(k)]) / ref);
  }
  return gamma;
}

// Solves (A + ridge) x = b for a symmetric positive semi-definite A.
// `ridge_mask` selects the diagonal entries that receive the ridge term.
Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, bool force_ridge,
                          const Eigen::VectorXd& ridge_mask, bool& ridged) {
  if (!force_ridge) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const auto d = ldlt.vectorD();
      const double dmax = d.maxCoeff();
      const double dmin = d.minCoeff();
      if (dmax > 0.0 && dmin > kMinReciprocalCondition * dmax) {
        ridged = false;
        return ldlt.solve(b);
      }
    }
  }
  ridged = true;
  const double scale = kRidgeScale * a.trace() / static_cast<double>(a.rows());
  Eigen::MatrixXd reg = a;
  reg.diagonal() += scale * ridge_mask;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
  return ldlt.solve(b);
}

void check_cells(const Dataset& data) {
  const auto counts = data.cell_counts();
  for (Cell c : kAllCells) {
    if (counts[static_cast<std::size_t>(index(c))] == 0) {
      throw EstimationError("empty treatment cell " + std::string(cell_name(c)));
    }
  }
}

void check_layout(const Dataset& data, const MultiIndexBasis& basis) {
  if (basis.dimension() != data.layout().continuous) {
    throw ShapeError("basis dimension does not match the number of continuous covariates");
  }
}

GpsPointFit solve_logit(const Window& win, Eigen::VectorXd gamma, std::size_t p, const LocalFitOptions& options) {
  GpsPointFit fit;
  fit.window_count = static_cast<std::size_t>(win.w.size());
  const double scale = win.used > 0 ? 1.0 / static_cast<double>(win.used) : 0.0;
  const bool degenerate = fit.window_count < 3 * p;
  const Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(3 * p));
  const double tolerance = options.gradient_tolerance * std::min(1.0, scale * win.w.sum());

  LikelihoodDerivatives cur = window_objective(win, gamma, scale, true);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    fit.gradient_norm = cur.gradient.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm < tolerance) break;
    bool ridged = false;
    const Eigen::VectorXd step = spd_solve(-cur.hessian, cur.gradient, degenerate, mask, ridged);
    fit.ridge = fit.ridge || ridged;
    if (!step.allFinite()) break;
    double t = 1.0;
    bool improved = false;
    // Near the optimum the objective is flat to rounding error.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(cur.value));
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::VectorXd trial = gamma + t * step;
      const double value = window_objective(win, trial, scale, false).value;
      if (std::isfinite(value) && value >= cur.value - slack) {
        gamma = trial;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    fit.iterations = iter + 1;
    if (!improved) break;
    cur = window_objective(win, gamma, scale, true);
  }
  fit.gradient_norm = cur.gradient.lpNorm<Eigen::Infinity>();
  fit.converged = fit.gradient_norm < tolerance && gamma.allFinite();
  const auto ps = static_cast<Eigen::Index>(p);
  fit.probabilities = logistic_probabilities(gamma[0], gamma[ps], gamma[2 * ps]);
  fit.gamma = std::move(gamma);
  return fit;
}

MixedKernel make_kernel(const Dataset& data, double h, const DiscreteKernelParams& params, KernelFamily family) {
  return MixedKernel(ContinuousKernel(family, data.layout().continuous), h, params, data.layout(),
                     max_ordered_gap(data));
}

double discrete_distance(const Dataset& data, std::size_t a, std::size_t b) {
  double dist = 0.0;
  for (std::size_t s = 0; s < data.layout().unordered; ++s) dist += data.x_u(a)[s] != data.x_u(b)[s] ? 1.0 : 0.0;
  for (std::size_t s = 0; s < data.layout().ordered; ++s) dist += std::abs(data.x_o(a)[s] - data.x_o(b)[s]);
  return dist;
}

double continuous_distance(const Dataset& data, std::size_t a, std::size_t b) {
  double dist = 0.0;
  for (std::size_t s = 0; s < data.layout().continuous; ++s) {
    const double diff = data.x_c(a)[s] - data.x_c(b)[s];
    dist += diff * diff;
  }
  return dist;
}

std::size_t count_flags(const std::vector<std::uint8_t>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

}  // namespace

std::array<double, 4> logistic_probabilities(double g10, double g01, double g00) {
  const double mx = std::max({0.0, g10, g01, g00});
  const double e11 = std::exp(-mx);
  const double e10 = std::exp(g10 - mx);
  const double e01 = std::exp(g01 - mx);
  const double e00 = std::exp(g00 - mx);
  const double s = e11 + e10 + e01 + e00;
  std::array<double, 4> p{};
  p[index(Cell::k10)] = e10 / s;
  p[index(Cell::k01)] = e01 / s;
  p[index(Cell::k00)] = e00 / s;
  p[index(Cell::k11)] = 1.0 - (p[index(Cell::k10)] + p[index(Cell::k01)] + p[index(Cell::k00)]);
  return p;
}

double local_likelihood(Cell cell, const Eigen::VectorXd& z, const Eigen::VectorXd& gamma) {
  return local_likelihood_derivatives(cell, z, gamma).value;
}

double local_likelihood(const Sample& w, const CovariatePoint& center, const Eigen::VectorXd& gamma,
                        const MultiIndexBasis& basis) {
  const Eigen::VectorXd z = basis.build(w.x_c, center.continuous);
  return local_likelihood(make_cell(w.d, w.t), z, gamma);
}

LikelihoodDerivatives local_likelihood_derivatives(Cell cell, const Eigen::VectorXd& z, const Eigen::VectorXd& gamma) {
  if (gamma.size() != 3 * z.size()) throw ShapeError("gamma must have three blocks of the basis size");
  Window win;
  win.z = z;
  win.w = Eigen::VectorXd::Ones(1);
  win.y = Eigen::VectorXd::Zero(1);
  win.cell = {index(cell)};
  win.used = 1;
  return window_objective(win, gamma, 1.0, true);
}

GpsPointFit fit_local_mlogit_at(const Dataset& data, const CovariatePoint& center, std::optional<std::size_t> exclude,
                                const MultiIndexBasis& basis, const GpsBandwidth& bandwidth,
                                const LocalFitOptions& options) {
  check_layout(data, basis);
  const MixedKernel kernel = make_kernel(data, bandwidth.h, bandwidth.lambda, options.kernel);
  WindowRequest req{&data, &center, exclude, &basis, &kernel, nullptr};
  const Window win = gather(req, [](std::size_t) { return true; });
  return solve_logit(win, initial_gamma(data, exclude, basis.size()), basis.size(), options);
}

LikelihoodDerivatives local_objective(const Dataset& data, const CovariatePoint& center,
                                      std::optional<std::size_t> exclude, const MultiIndexBasis& basis,
                                      const GpsBandwidth& bandwidth, const Eigen::VectorXd& gamma,
                                      KernelFamily family) {
  check_layout(data, basis);
  const MixedKernel kernel = make_kernel(data, bandwidth.h, bandwidth.lambda, family);
  WindowRequest req{&data, &center, exclude, &basis, &kernel, nullptr};
  const Window win = gather(req, [](std::size_t) { return true; });
  const double scale = win.used > 0 ? 1.0 / static_cast<double>(win.used) : 0.0;
  return window_objective(win, gamma, scale, true);
}

std::size_t GpsFit::converged_count() const { return count_flags(converged); }
std::size_t GpsFit::ridge_count() const { return count_flags(ridge); }
std::size_t GpsFit::fallback_count() const { return count_flags(fallback); }
std::size_t GpsFit::truncated_count() const { return count_flags(truncated); }

GpsFit fit_local_mlogit_loo(const Dataset& data, const MultiIndexBasis& basis, const GpsBandwidth& bandwidth,
                            const LocalFitOptions& options) {
  check_layout(data, basis);
  check_cells(data);
  const std::size_t n = data.size();
  const std::size_t p = basis.size();
  const MixedKernel kernel = make_kernel(data, bandwidth.h, bandwidth.lambda, options.kernel);
  std::optional<WeightMatrix> cache;
  if (options.cache_weights) cache.emplace(data, kernel);

  std::vector<GpsPointFit> points(n);
  parallel_for(n, options.workers, [&](std::size_t j) {
    const CovariatePoint center = data.point(j);
    WindowRequest req{&data, &center, j, &basis, &kernel, cache ? &*cache : nullptr};
    const Window win = gather(req, [](std::size_t) { return true; });
    points[j] = solve_logit(win, initial_gamma(data, j, p), p, options);
  });

  GpsFit fit;
  fit.bandwidth = bandwidth;
  fit.order = basis.order();
  fit.probabilities.resize(static_cast<Eigen::Index>(n), 4);
  fit.gamma.resize(n);
  fit.converged.assign(n, 0);
  fit.ridge.assign(n, 0);
  fit.fallback.assign(n, 0);
  fit.truncated.assign(n, 0);
  fit.window_counts.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (int c = 0; c < 4; ++c) fit.probabilities(static_cast<Eigen::Index>(j), c) = points[j].probabilities[static_cast<std::size_t>(c)];
    fit.gamma[j] = points[j].gamma;
    fit.converged[j] = points[j].converged ? 1 : 0;
    fit.ridge[j] = points[j].ridge ? 1 : 0;
    fit.window_counts[j] = points[j].window_count;
  }

  // Nearest converged point: same discrete cell first, then continuous distance.
  const auto ps = static_cast<Eigen::Index>(p);
  for (std::size_t j = 0; j < n; ++j) {
    if (fit.converged[j]) continue;
    std::optional<std::size_t> best;
    double best_disc = std::numeric_limits<double>::infinity();
    double best_cont = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (!fit.converged[k]) continue;
      const double disc = discrete_distance(data, j, k);
      const double cont = continuous_distance(data, j, k);
      if (disc < best_disc || (disc == best_disc && cont < best_cont)) {
        best = k;
        best_disc = disc;
        best_cont = cont;
      }
    }
    if (!best) continue;
    const Eigen::VectorXd& g = fit.gamma[*best];
    const Eigen::VectorXd z = basis.build(data.x_c(j), data.x_c(*best));
    const auto probs = logistic_probabilities(z.dot(g.segment(0, ps)), z.dot(g.segment(ps, ps)),
                                              z.dot(g.segment(2 * ps, ps)));
    for (int c = 0; c < 4; ++c) fit.probabilities(static_cast<Eigen::Index>(j), c) = probs[static_cast<std::size_t>(c)];
    fit.gamma[j] = g;
    fit.fallback[j] = 1;
  }
  return fit;
}

GpsFit predict_gps(GpsFit fit, double floor) {
  if (!(floor >= 0.0 && floor < 0.25)) throw ParameterError("truncation floor must lie in [0, 0.25)");
  fit.truncation_floor = floor;
  fit.truncated.assign(fit.size(), 0);
  if (floor == 0.0) return fit;
  for (Eigen::Index j = 0; j < fit.probabilities.rows(); ++j) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      if (fit.probabilities(j, c) < floor) {
        fit.probabilities(j, c) = floor;
        fit.truncated[static_cast<std::size_t>(j)] = 1;
      }
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------

namespace {

OrPointFit solve_ls(const Window& win, std::size_t p, double sparse_factor) {
  OrPointFit fit;
  fit.effective_count = static_cast<std::size_t>(win.w.size());
  const auto ps = static_cast<Eigen::Index>(p);
  if (fit.effective_count == 0) {
    fit.mean = std::numeric_limits<double>::quiet_NaN();
    fit.beta = Eigen::VectorXd::Constant(ps, std::numeric_limits<double>::quiet_NaN());
    return fit;
  }
  if (p > 1 && sparse_factor > 0.0) {
    const double sw = win.w.sum();
    const double kish = sw * sw / win.w.squaredNorm();
    if (kish < sparse_factor * static_cast<double>(p)) {
      fit.beta = Eigen::VectorXd::Zero(ps);
      fit.beta[0] = win.w.dot(win.y) / sw;
      fit.mean = fit.beta[0];
      fit.reduced = true;
      return fit;
    }
  }
  const Eigen::MatrixXd a = win.z * win.w.asDiagonal() * win.z.transpose();
  const Eigen::VectorXd rhs = win.z * win.w.cwiseProduct(win.y);
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(ps);
  mask[0] = 0.0;  // the intercept is never penalised so constants are reproduced exactly
  if (ps == 1) mask[0] = 1.0;
  bool ridged = false;
  fit.beta = spd_solve(a, rhs, fit.effective_count < p, mask, ridged);
  fit.ridge = ridged;
  fit.mean = fit.beta[0];
  return fit;
}

std::vector<OrCellFit> fit_ls_loo_cells(const Dataset& data, std::span<const Cell> cells, const MultiIndexBasis& basis,
                                        const OrBandwidth& bandwidth, const LocalFitOptions& options) {
  check_layout(data, basis);
  const auto counts = data.cell_counts();
  for (Cell c : cells) {
    if (counts[static_cast<std::size_t>(index(c))] == 0) {
      throw EstimationError("empty treatment cell " + std::string(cell_name(c)));
    }
  }
  const std::size_t n = data.size();
  const std::size_t p = basis.size();
  const MixedKernel kernel = make_kernel(data, bandwidth.b, bandwidth.theta, options.kernel);
  std::optional<WeightMatrix> cache;
  if (options.cache_weights) cache.emplace(data, kernel);

  std::vector<OrCellFit> fits(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    fits[k].cell = cells[k];
    fits[k].bandwidth = bandwidth;
    fits[k].order = basis.order();
    fits[k].loo_means.resize(static_cast<Eigen::Index>(n));
    fits[k].beta.resize(n);
    fits[k].effective_counts.assign(n, 0);
    fits[k].ridge.assign(n, 0);
    fits[k].reduced.assign(n, 0);
  }
  std::array<int, 4> slot{-1, -1, -1, -1};
  for (std::size_t k = 0; k < cells.size(); ++k) slot[static_cast<std::size_t>(index(cells[k]))] = static_cast<int>(k);

  parallel_for(n, options.workers, [&](std::size_t j) {
    const CovariatePoint center = data.point(j);
    WindowRequest req{&data, &center, j, &basis, &kernel, cache ? &*cache : nullptr};
    const Window all = gather(req, [&](std::size_t i) { return slot[static_cast<std::size_t>(index(data.cell(i)))] >= 0; });
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const int c = index(cells[k]);
      std::vector<Eigen::Index> keep;
      for (std::size_t i = 0; i < all.cell.size(); ++i) {
        if (all.cell[i] == c) keep.push_back(static_cast<Eigen::Index>(i));
      }
      Window win;
      win.used = all.used;
      win.z = all.z(Eigen::all, keep);
      win.w = all.w(keep);
      win.y = all.y(keep);
      win.cell.assign(keep.size(), c);
      const OrPointFit pf = solve_ls(win, p, options.sparse_window_factor);
      fits[k].loo_means[static_cast<Eigen::Index>(j)] = pf.mean;
      fits[k].beta[j] = pf.beta;
      fits[k].effective_counts[j] = pf.effective_count;
      fits[k].ridge[j] = pf.ridge ? 1 : 0;
      fits[k].reduced[j] = pf.reduced ? 1 : 0;
    }
  });
  return fits;
}

}  // namespace

OrPointFit fit_local_ls_at(const Dataset& data, Cell cell, const CovariatePoint& center,
                           std::optional<std::size_t> exclude, const MultiIndexBasis& basis,
                           const OrBandwidth& bandwidth, const LocalFitOptions& options) {
  check_layout(data, basis);
  const MixedKernel kernel = make_kernel(data, bandwidth.b, bandwidth.theta, options.kernel);
  WindowRequest req{&data, &center, exclude, &basis, &kernel, nullptr};
  const Window win = gather(req, [&](std::size_t i) { return data.cell(i) == cell; });
  return solve_ls(win, basis.size(), options.sparse_window_factor);
}

std::size_t OrCellFit::ridge_count() const { return count_flags(ridge); }
std::size_t OrCellFit::reduced_count() const { return count_flags(reduced); }

OrCellFit fit_local_ls_loo(const Dataset& data, Cell cell, const MultiIndexBasis& basis, const OrBandwidth& bandwidth,
                           const LocalFitOptions& options) {
  const std::array<Cell, 1> cells{cell};
  return std::move(fit_ls_loo_cells(data, cells, basis, bandwidth, options).front());
}

const OrCellFit& OrFit::at(Cell c) const {
  const auto& slot = cells[static_cast<std::size_t>(index(c))];
  if (!slot) throw EstimationError("outcome regression for cell " + std::string(cell_name(c)) + " was not fitted");
  return *slot;
}

void OrFit::set(OrCellFit fit) { cells[static_cast<std::size_t>(index(fit.cell))] = std::move(fit); }

OrFit fit_local_ls_loo(const Dataset& data, std::span<const Cell> cells, const MultiIndexBasis& basis,
                       const OrBandwidth& bandwidth, const LocalFitOptions& options) {
  OrFit out;
  for (auto& f : fit_ls_loo_cells(data, cells, basis, bandwidth, options)) out.set(std::move(f));
  return out;
}

}  // namespace didcc
