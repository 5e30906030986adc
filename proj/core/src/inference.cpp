#include "didcc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "didcc/error.hpp"
#include "didcc/parallel.hpp"
#include "didcc/stats.hpp"

namespace didcc {

HausmanResult hausman_test(const AttEstimate& dr, const AttEstimate& sz) {
  if (dr.influence.size() != sz.influence.size() || dr.influence.size() == 0) {
    throw ShapeError("influence vectors must be non-empty and aligned");
  }
  HausmanResult r;
  r.n = dr.size();
  r.contrast = dr.tau_hat - sz.tau_hat;
  r.v_hat = (dr.influence - sz.influence).squaredNorm() / static_cast<double>(r.n);
  if (!(r.v_hat >= kDegenerateVariance)) {
    if (r.contrast == 0.0 && r.v_hat == 0.0) {
      // Identical estimators: nothing to test.
      r.statistic = 0.0;
      r.p_value = 1.0;
      return r;
    }
    throw DegenerateTestError("Hausman contrast variance is degenerate (V = " + std::to_string(r.v_hat) + ")");
  }
  r.statistic = static_cast<double>(r.n) * r.contrast * r.contrast / r.v_hat;
  r.p_value = chi2_1_survival(r.statistic);
  for (std::size_t k = 0; k < kTestLevels.size(); ++k) r.reject[k] = r.decision_at(kTestLevels[k]);
  return r;
}

std::string_view weight_law_name(WeightLaw law) {
  switch (law) {
    case WeightLaw::Exponential: return "exponential";
    case WeightLaw::Mammen: return "mammen";
    case WeightLaw::Unit: return "unit";
  }
  return "";
}

WeightLaw parse_weight_law(std::string_view name) {
  if (name == "exponential") return WeightLaw::Exponential;
  if (name == "mammen") return WeightLaw::Mammen;
  if (name == "unit") return WeightLaw::Unit;
  throw ParameterError("unknown bootstrap weight law '" + std::string(name) + "'");
}

void BootstrapConfig::validate() const {
  if (draws < 1) throw ParameterError("bootstrap needs at least one draw");
}

namespace {

struct Clusters {
  std::vector<std::size_t> of;  // observation -> dense cluster index (sorted by id)
  std::size_t count = 0;
};

Clusters make_clusters(const Dataset& data, bool use_ids) {
  Clusters c;
  const std::size_t n = data.size();
  c.of.resize(n);
  if (!use_ids || !data.has_clusters()) {
    for (std::size_t i = 0; i < n; ++i) c.of[i] = i;
    c.count = n;
    return c;
  }
  std::map<std::int64_t, std::size_t> ids;
  for (std::size_t i = 0; i < n; ++i) ids.emplace(data.cluster(i), 0);
  std::size_t k = 0;
  for (auto& [id, slot] : ids) slot = k++;
  for (std::size_t i = 0; i < n; ++i) c.of[i] = ids.at(data.cluster(i));
  c.count = k;
  return c;
}

double draw_weight(WeightLaw law, std::mt19937_64& rng) {
  switch (law) {
    case WeightLaw::Exponential: return std::exponential_distribution<double>(1.0)(rng);
    case WeightLaw::Mammen: {
      const double s5 = std::sqrt(5.0);
      const double p_low = (s5 + 1.0) / (2.0 * s5);
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_low ? 1.0 - (s5 - 1.0) / 2.0
                                                                         : 1.0 + (s5 + 1.0) / 2.0;
    }
    case WeightLaw::Unit: return 1.0;
  }
  return 1.0;
}

}  // namespace

BootstrapResult bootstrap_influence(const Dataset& data, const Eigen::VectorXd& influence,
                                    const BootstrapConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(influence.size()) != data.size()) {
    throw ShapeError("influence vector does not match the data");
  }
  const Clusters clusters = make_clusters(data, config.cluster);
  if (clusters.count < 2) throw ParameterError("bootstrap needs at least two clusters");

  std::vector<double> sums(clusters.count, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) sums[clusters.of[i]] += influence[static_cast<Eigen::Index>(i)];

  BootstrapResult r;
  r.clusters = clusters.count;
  r.clustered = config.cluster && data.has_clusters();
  r.few_draws = config.draws < kMinRecommendedDraws;
  r.draws.assign(config.draws, 0.0);
  const double n = static_cast<double>(data.size());
  const auto lo = static_cast<std::uint32_t>(config.seed & 0xffffffffu);
  const auto hi = static_cast<std::uint32_t>(config.seed >> 32);
  parallel_for(config.draws, config.workers, [&](std::size_t b) {
    std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(b & 0xffffffffu), static_cast<std::uint32_t>(b >> 32)};
    std::mt19937_64 rng(seq);
    double acc = 0.0;
    for (double s : sums) acc += (draw_weight(config.weight_law, rng) - 1.0) * s;
    r.draws[b] = acc / n;
  });
  if (r.draws.size() > 1) {
    const double m = mean(r.draws);
    double ss = 0.0;
    for (double v : r.draws) ss += (v - m) * (v - m);
    r.se = std::sqrt(ss / static_cast<double>(r.draws.size() - 1));
  }
  return r;
}

BootstrapResult bootstrap_se(const Dataset& data, const AttEstimate& est, const BootstrapConfig& config) {
  return bootstrap_influence(data, est.influence, config);
}

BootstrapTest bootstrap_hausman_pvalue(const Dataset& data, const AttEstimate& dr, const AttEstimate& sz,
                                       const BootstrapConfig& config) {
  if (dr.influence.size() != sz.influence.size()) throw ShapeError("influence vectors must be aligned");
  BootstrapTest t;
  t.contrast = bootstrap_influence(data, dr.influence - sz.influence, config);
  const double observed = std::abs(dr.tau_hat - sz.tau_hat);
  const auto exceed = std::count_if(t.contrast.draws.begin(), t.contrast.draws.end(),
                                    [&](double v) { return std::abs(v) >= observed; });
  t.p_value = static_cast<double>(exceed) / static_cast<double>(t.contrast.draws.size());
  return t;
}

}  // namespace didcc
