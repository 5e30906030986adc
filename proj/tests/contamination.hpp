#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "didcc/estimators.hpp"
#include "didcc/simulation.hpp"
#include "didcc/stats.hpp"
#include "support.hpp"

namespace didcc::testing {

enum class Contaminated { Propensity, Outcome };

struct ContaminationResult {
  double avg_bias = 0.0;
  double mc_se = 0.0;
  std::size_t reps = 0;
};

// Oracle nuisances with exactly one of the two replaced by a wrong model:
// propensities shrunk halfway to uniform, or control-cell regressions shifted
// by 5 X1 + 3 sin(4 X2) + 2.
inline ContaminationResult contamination_bias(Design design, Contaminated which, std::size_t reps, std::size_t n,
                                              std::uint64_t seed) {
  DgpSpec spec;
  spec.design = design;
  spec.n = n;
  const double truth = true_att_exact(spec);
  std::vector<double> bias;
  for (std::size_t r = 0; r < reps; ++r) {
    spec.seed = seed + r;
    const Dataset data = draw_dataset(spec);
    GpsFit gps = oracle_gps_fit(spec, data);
    OrFit m = oracle_or_fit(spec, data);
    if (which == Contaminated::Propensity) {
      const Eigen::MatrixXd p = 0.5 * gps.probabilities.array() + 0.125;
      gps = gps_from_matrix(p);
    } else {
      for (Cell c : kControlCells) {
        Eigen::VectorXd v = m.mean(c);
        for (std::size_t i = 0; i < data.size(); ++i) {
          const auto x = data.x_c(i);
          v[static_cast<Eigen::Index>(i)] += 5.0 * x[0] + 3.0 * std::sin(4.0 * x[1]) + 2.0;
        }
        m.set(or_cell_from_means(c, v));
      }
    }
    gps = predict_gps(std::move(gps), 0.01);
    bias.push_back(att_dr(data, gps, m).tau_hat - truth);
  }
  return {mean(bias), sample_sd(bias) / std::sqrt(static_cast<double>(reps)), reps};
}

}  // namespace didcc::testing
