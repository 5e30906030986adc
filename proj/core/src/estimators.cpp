#include "didcc/estimators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "didcc/error.hpp"
#include "didcc/stats.hpp"

namespace didcc {

namespace {

void check_gps(const Dataset& data, const GpsFit& gps) {
  if (gps.size() != data.size()) throw ShapeError("propensity fit does not cover every observation");
}

void check_or(const Dataset& data, const OrFit& or_fit, std::span<const Cell> cells) {
  for (Cell c : cells) {
    if (!or_fit.has(c)) throw EstimationError("outcome regression for cell " + std::string(cell_name(c)) + " is missing");
    if (static_cast<std::size_t>(or_fit.mean(c).size()) != data.size()) {
      throw ShapeError("outcome fit does not cover every observation");
    }
    if (!or_fit.at(c).all_finite()) {
      throw EstimationError("outcome regression for cell " + std::string(cell_name(c)) + " is not finite everywhere");
    }
  }
}

Eigen::VectorXd normalise(Eigen::VectorXd raw, Cell cell) {
  const double m = raw.mean();
  if (!(m > 0.0) || !std::isfinite(m)) throw EstimationError("empty treatment cell " + std::string(cell_name(cell)));
  return raw / m;
}

Eigen::VectorXd indicator(const Dataset& data, Cell c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v[static_cast<Eigen::Index>(i)] = data.in_cell(i, c) ? 1.0 : 0.0;
  return v;
}

}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Dr: return "dr";
    case EstimatorKind::Sz: return "sz";
    case EstimatorKind::TwfeLinear: return "twfe_linear";
    case EstimatorKind::TwfeSaturated: return "twfe_saturated";
  }
  return "";
}

double AttEstimate::standard_error() const {
  return size() == 0 ? 0.0 : std::sqrt(omega_hat / static_cast<double>(size()));
}

void finalize_estimate(AttEstimate& est, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must lie in (0, 1)");
  est.level = level;
  est.omega_hat = est.influence.squaredNorm() / static_cast<double>(est.influence.size());
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double half = z * est.standard_error();
  est.ci_low = est.tau_hat - half;
  est.ci_high = est.tau_hat + half;
}

HajekWeights hajek_weights_dr(const Dataset& data, const GpsFit& gps) {
  check_gps(data, gps);
  const auto n = static_cast<Eigen::Index>(data.size());
  HajekWeights out;
  out.w[static_cast<std::size_t>(index(Cell::k11))] = normalise(indicator(data, Cell::k11), Cell::k11);
  for (Cell c : kControlCells) {
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i);
      if (data.in_cell(j, c)) raw[i] = gps.p(j, Cell::k11) / gps.p(j, c);
    }
    out.w[static_cast<std::size_t>(index(c))] = normalise(std::move(raw), c);
  }
  return out;
}

HajekWeights hajek_weights_sz(const Dataset& data, const GpsFit& gps) {
  check_gps(data, gps);
  const auto n = static_cast<Eigen::Index>(data.size());
  const double cap = 1.0 - gps.truncation_floor;
  HajekWeights out;
  for (Cell c : kAllCells) {
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i);
      if (!data.in_cell(j, c)) continue;
      if (treatment_of(c) == 1) {
        raw[i] = 1.0;
        continue;
      }
      const double pt = std::min(gps.p(j, Cell::k11) + gps.p(j, Cell::k10), cap);
      if (!(pt < 1.0)) throw EstimationError("treated-group propensity reaches 1; increase the truncation floor");
      raw[i] = pt / (1.0 - pt);
    }
    out.w[static_cast<std::size_t>(index(c))] = normalise(std::move(raw), c);
  }
  return out;
}

Eigen::VectorXd conditional_att(const OrFit& or_fit) {
  return or_fit.mean(Cell::k11) - or_fit.mean(Cell::k10) - or_fit.mean(Cell::k01) + or_fit.mean(Cell::k00);
}

AttEstimate att_dr(const Dataset& data, const GpsFit& gps, const OrFit& or_fit, double level) {
  check_or(data, or_fit, kControlCells);
  const HajekWeights w = hajek_weights_dr(data, gps);
  const Eigen::VectorXd& y = data.outcomes();
  const Eigen::VectorXd tau_yx = y - (or_fit.mean(Cell::k10) + or_fit.mean(Cell::k01) - or_fit.mean(Cell::k00));

  Eigen::VectorXd control = Eigen::VectorXd::Zero(y.size());
  for (Cell c : kControlCells) control += cell_sign(c) * w[c].cwiseProduct(y - or_fit.mean(c));

  AttEstimate est;
  est.kind = EstimatorKind::Dr;
  est.tau_hat = (w[Cell::k11].cwiseProduct(tau_yx) + control).mean();
  est.influence = control + w[Cell::k11].cwiseProduct((tau_yx.array() - est.tau_hat).matrix());
  finalize_estimate(est, level);
  return est;
}

AttEstimate att_sz(const Dataset& data, const GpsFit& gps, const OrFit& or_fit, double level) {
  check_or(data, or_fit, kAllCells);
  const HajekWeights w = hajek_weights_sz(data, gps);
  const Eigen::VectorXd& y = data.outcomes();
  const Eigen::VectorXd tau_x = conditional_att(or_fit);

  Eigen::VectorXd treated(y.size());
  for (std::size_t i = 0; i < data.size(); ++i) treated[static_cast<Eigen::Index>(i)] = data.d(i);
  treated = normalise(std::move(treated), Cell::k11);

  Eigen::VectorXd residual = Eigen::VectorXd::Zero(y.size());
  for (Cell c : kAllCells) residual += cell_sign(c) * w[c].cwiseProduct(y - or_fit.mean(c));

  AttEstimate est;
  est.kind = EstimatorKind::Sz;
  est.tau_hat = (treated.cwiseProduct(tau_x) + residual).mean();
  est.influence = treated.cwiseProduct((tau_x.array() - est.tau_hat).matrix()) + residual;
  finalize_estimate(est, level);
  return est;
}

Eigen::MatrixXd twfe_design(const Dataset& data, TwfeSpec spec) {
  const std::size_t n = data.size();
  const auto& layout = data.layout();
  const std::size_t k = layout.continuous + layout.unordered + layout.ordered;
  std::size_t cols = 4 + k;
  if (spec == TwfeSpec::Saturated) cols += layout.continuous + k * (k - 1) / 2;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  std::vector<double> cov(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    std::size_t p = 0;
    for (double v : data.x_c(i)) cov[p++] = v;
    for (int v : data.x_u(i)) cov[p++] = v;
    for (int v : data.x_o(i)) cov[p++] = v;
    Eigen::Index col = 0;
    x(r, col++) = 1.0;
    x(r, col++) = data.t(i);
    x(r, col++) = data.d(i);
    x(r, col++) = data.t(i) * data.d(i);
    for (double v : cov) x(r, col++) = v;
    if (spec == TwfeSpec::Saturated) {
      for (std::size_t s = 0; s < layout.continuous; ++s) x(r, col++) = cov[s] * cov[s];
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) x(r, col++) = cov[a] * cov[b];
      }
    }
  }
  return x;
}

AttEstimate att_twfe(const Dataset& data, TwfeSpec spec, double level) {
  const Eigen::MatrixXd x = twfe_design(data, spec);
  const Eigen::VectorXd& y = data.outcomes();
  const auto n = static_cast<double>(data.size());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw EstimationError("two-way fixed effects design is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd u = y - x * beta;
  const Eigen::MatrixXd bread = (x.transpose() * x / n).inverse();
  const Eigen::RowVectorXd row = bread.row(3);

  AttEstimate est;
  est.kind = spec == TwfeSpec::Linear ? EstimatorKind::TwfeLinear : EstimatorKind::TwfeSaturated;
  est.tau_hat = beta[3];
  est.influence = (x * row.transpose()).cwiseProduct(u);
  finalize_estimate(est, level);
  return est;
}

double bias_decomposition(const Dataset& data, const OrFit& or_fit) {
  check_or(data, or_fit, kAllCells);
  const Eigen::VectorXd tau_x = conditional_att(or_fit);
  double sum_d = 0.0;
  double sum_dt = 0.0;
  std::size_t n_d = 0;
  std::size_t n_dt = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.d(i) != 1) continue;
    sum_d += tau_x[static_cast<Eigen::Index>(i)];
    ++n_d;
    if (data.t(i) == 1) {
      sum_dt += tau_x[static_cast<Eigen::Index>(i)];
      ++n_dt;
    }
  }
  if (n_dt == 0) throw EstimationError("empty treatment cell (1,1)");
  return sum_d / static_cast<double>(n_d) - sum_dt / static_cast<double>(n_dt);
}

double efficiency_loss_rho(const Dataset& data, const OrFit& or_fit) {
  check_or(data, or_fit, kAllCells);
  const Eigen::VectorXd tau_x = conditional_att(or_fit);
  const auto n = static_cast<double>(data.size());
  std::vector<double> treated;
  double t_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    t_sum += data.t(i);
    if (data.d(i) == 1) treated.push_back(tau_x[static_cast<Eigen::Index>(i)]);
  }
  if (treated.empty()) throw EstimationError("no treated observations");
  const double t_bar = t_sum / n;
  const double d_bar = static_cast<double>(treated.size()) / n;
  if (!(t_bar > 0.0)) throw EstimationError("no post-period observations");
  const double m = mean(treated);
  double var = 0.0;
  for (double v : treated) var += (v - m) * (v - m);
  var /= static_cast<double>(treated.size());
  return (1.0 - t_bar) / (d_bar * t_bar) * var;
}

}  // namespace didcc
