#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "didcc/bandwidth.hpp"
#include "didcc/error.hpp"
#include "support.hpp"

using namespace didcc;
using didcc::testing::make_sample;
using didcc::testing::random_dataset;

namespace {

// Two observations per cell, no covariates.
Dataset toy_eight() {
  std::vector<Sample> s;
  const double ys[8] = {1.0, 2.0, 0.5, 1.5, -1.0, 0.0, 3.0, 2.5};
  for (int i = 0; i < 8; ++i) {
    const Cell c = static_cast<Cell>(i / 2);
    s.push_back(make_sample(ys[i], treatment_of(c), period_of(c)));
  }
  return Dataset::from_samples(s);
}

Eigen::MatrixXd indicators(const Dataset& data) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), 4);
  for (std::size_t i = 0; i < data.size(); ++i) p(static_cast<Eigen::Index>(i), index(data.cell(i))) = 1.0;
  return p;
}

OrFit perfect_or(const Dataset& data) {
  OrFit f;
  for (Cell c : kAllCells) f.set(testing::or_cell_from_means(c, data.outcomes()));
  return f;
}

BandwidthConfig small_config(std::vector<double> h, std::vector<double> lam, std::vector<double> b,
                             std::vector<double> theta) {
  BandwidthConfig c;
  c.h_grid = std::move(h);
  c.b_grid = std::move(b);
  for (double v : lam) c.lambda_grid.push_back({v, v});
  for (double v : theta) c.theta_grid.push_back({v, v});
  return c;
}

}  // namespace

TEST_SUITE("bandwidth") {
  TEST_CASE("perfect fits give a zero criterion") {
    const Dataset data = toy_eight();
    const GpsFit gps = testing::gps_from_matrix(indicators(data));
    const OrFit m = perfect_or(data);
    CHECK(cv_criterion_ls(data, gps, m) == 0.0);
    CHECK(cv_criterion_ml(data, gps, m) == 0.0);
  }

  TEST_CASE("uniform probabilities give log 4") {
    const Dataset data = toy_eight();
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(8, 4, 0.25);
    CHECK(cv_ps_block(data, p, CvCriterion::LocalLikelihood) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(cv_ps_block(data, p, CvCriterion::LeastSquares) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("intercept-only leave-one-out fit on the eight-point toy") {
    // Own cell share 1/7, the three other cells 2/7 each.
    const Dataset data = toy_eight();
    const MultiIndexBasis basis(0, 0);
    const GpsFit fit = fit_local_mlogit_loo(data, basis, {1.0, {1.0, 1.0}});
    const double expected_ls = (6.0 / 7.0) * (6.0 / 7.0) + 3.0 * (2.0 / 7.0) * (2.0 / 7.0);
    CHECK(std::abs(cv_ps_block(data, fit.probabilities, CvCriterion::LeastSquares) - expected_ls) < 1e-12);
    CHECK(std::abs(cv_ps_block(data, fit.probabilities, CvCriterion::LocalLikelihood) - std::log(7.0)) < 1e-12);
    // Leave-one-out cell means leave the single other member of the cell.
    const OrCellFit m = fit_local_ls_loo(data, Cell::k11, basis, {1.0, {1.0, 1.0}});
    CHECK(m.loo_means[0] == 2.0);
    CHECK(m.loo_means[1] == 1.0);
    CHECK(cv_or_block(data, m) == doctest::Approx((1.0 + 1.0) / 8.0).epsilon(1e-15));
  }

  TEST_CASE("likelihood criterion floors probabilities inside the log") {
    const Dataset data = toy_eight();
    Eigen::MatrixXd p = indicators(data);
    p(0, 0) = 0.0;
    p(0, 1) = 1.0;
    CHECK(cv_ps_block(data, p, CvCriterion::LocalLikelihood) ==
          doctest::Approx(-std::log(kLikelihoodFloor) / 8.0).epsilon(1e-14));
  }

  TEST_CASE("non-finite fits give an infinite criterion") {
    const Dataset data = toy_eight();
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(8, 4, 0.25);
    p(3, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK(std::isinf(cv_ps_block(data, p, CvCriterion::LeastSquares)));
    Eigen::VectorXd m = data.outcomes();
    m[5] = std::numeric_limits<double>::quiet_NaN();  // out-of-cell point still counts
    CHECK(std::isinf(cv_or_block(data, testing::or_cell_from_means(Cell::k11, m))));
  }

  TEST_CASE("singleton grid returns its point and criterion") {
    std::mt19937_64 rng(3);
    const Dataset data = random_dataset(rng, 80);
    const BandwidthConfig cfg = small_config({0.5}, {0.5}, {0.4}, {0.25});
    const SelectedBandwidths s = select_bandwidths(data, cfg);
    CHECK(s.gps.h == 0.5);
    CHECK(s.gps.lambda == DiscreteKernelParams{0.5, 0.5});
    for (Cell c : kAllCells) CHECK(s.or_bandwidth(c).b == 0.4);
    const MultiIndexBasis basis(1, 1);
    const GpsFit gps = fit_local_mlogit_loo(data, basis, {0.5, {0.5, 0.5}});
    const OrFit m = fit_local_ls_loo(data, kAllCells, basis, {0.4, {0.25, 0.25}});
    CHECK(s.criterion_value == cv_criterion_ml(data, gps, m));
  }

  TEST_CASE("infinite candidates are skipped") {
    std::mt19937_64 rng(5);
    const Dataset data = random_dataset(rng, 60, {1, 0, 0, 4});
    // theta = 0 and a tiny b leave empty windows.
    const BandwidthConfig cfg = small_config({0.6}, {0.5}, {1e-6, 0.8}, {0.0});
    const SelectedBandwidths s = select_bandwidths(data, cfg);
    for (Cell c : kAllCells) CHECK(s.or_bandwidth(c).b == 0.8);
    REQUIRE(s.or_trace.size() == 2);
    for (Cell c : kAllCells) CHECK(std::isinf(s.or_trace[0].value[static_cast<std::size_t>(index(c))]));

    const BandwidthConfig bad = small_config({0.6}, {0.5}, {1e-6}, {0.0});
    CHECK_THROWS_AS(select_bandwidths(data, bad), SelectionError);
  }

  TEST_CASE("separable search equals brute-force Cartesian search") {
    std::mt19937_64 rng(7);
    const Dataset data = random_dataset(rng, 70);
    const std::vector<double> hs{0.3, 0.9};
    const std::vector<double> bs{0.35, 1.2};
    const std::vector<double> thetas{0.2, 0.7};
    const MultiIndexBasis basis(1, 1);

    std::vector<GpsFit> gps;
    for (double h : hs) gps.push_back(fit_local_mlogit_loo(data, basis, {h, {0.5, 0.5}}));
    std::vector<OrBandwidth> or_bw;
    std::vector<OrFit> ors;
    for (double b : bs) {
      for (double t : thetas) {
        or_bw.push_back({b, {t, t}});
        ors.push_back(fit_local_ls_loo(data, kAllCells, basis, or_bw.back()));
      }
    }

    for (CvCriterion crit : {CvCriterion::LeastSquares, CvCriterion::LocalLikelihood}) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_h = 0;
      std::array<std::size_t, 4> best_or{};
      const std::size_t k = ors.size();
      for (std::size_t hi = 0; hi < gps.size(); ++hi) {
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c) {
              for (std::size_t d = 0; d < k; ++d) {
                OrFit m;
                m.set(ors[a].at(Cell::k11));
                m.set(ors[b].at(Cell::k10));
                m.set(ors[c].at(Cell::k01));
                m.set(ors[d].at(Cell::k00));
                const double v = crit == CvCriterion::LeastSquares ? cv_criterion_ls(data, gps[hi], m)
                                                                   : cv_criterion_ml(data, gps[hi], m);
                if (v < best) {
                  best = v;
                  best_h = hi;
                  best_or = {a, b, c, d};
                }
              }
            }
          }
        }
      }
      BandwidthConfig cfg = small_config(hs, {0.5}, bs, thetas);
      cfg.criterion = crit;
      const SelectedBandwidths s = select_bandwidths(data, cfg);
      CHECK(s.criterion_value == best);
      CHECK(s.gps.h == hs[best_h]);
      for (Cell c : kAllCells) CHECK(s.or_bandwidth(c) == or_bw[best_or[static_cast<std::size_t>(index(c))]]);
    }
  }

  TEST_CASE("shared outcome bandwidth minimises the summed outcome blocks") {
    std::mt19937_64 rng(9);
    const Dataset data = random_dataset(rng, 60);
    BandwidthConfig cfg = small_config({0.7}, {0.5}, {0.3, 0.6, 1.5}, {0.25, 0.75});
    cfg.share_or_bandwidths = true;
    const SelectedBandwidths s = select_bandwidths(data, cfg);
    double best = std::numeric_limits<double>::infinity();
    OrBandwidth arg;
    for (const auto& e : s.or_trace) {
      double v = 0.0;
      for (double x : e.value) v += x;
      if (v < best) {
        best = v;
        arg = e.bandwidth;
      }
    }
    for (Cell c : kAllCells) CHECK(s.or_bandwidth(c) == arg);
  }

  TEST_CASE("ties go to the smallest h, then the smallest lambda") {
    // Without continuous covariates h has no effect.
    std::mt19937_64 rng(11);
    const Dataset data = random_dataset(rng, 50, {0, 1, 1, 3});
    BandwidthConfig cfg = small_config({2.0, 0.5, 1.0}, {1.0}, {1.0}, {0.5});
    cfg.ps_order = 0;
    cfg.or_order = 0;
    const SelectedBandwidths s = select_bandwidths(data, cfg);
    CHECK(s.gps.h == 0.5);
    CHECK(s.ps_trace.size() == 3);
    CHECK(s.ps_trace[0].likelihood == s.ps_trace[2].likelihood);
  }

  TEST_CASE("grids are validated") {
    std::mt19937_64 rng(13);
    const Dataset data = random_dataset(rng, 40);
    CHECK_THROWS_AS(select_bandwidths(data, small_config({}, {0.5}, {1.0}, {0.5})), ParameterError);
    CHECK_THROWS_AS(select_bandwidths(data, small_config({-1.0}, {0.5}, {1.0}, {0.5})), ParameterError);
    CHECK_THROWS_AS(select_bandwidths(data, small_config({1.0}, {1.5}, {1.0}, {0.5})), ParameterError);
  }

  TEST_CASE("default grids") {
    std::mt19937_64 rng(15);
    const Dataset data = random_dataset(rng, 200, {2, 1, 1, 3});
    const double ref = reference_bandwidth(data);
    CHECK(ref > 0.0);
    const BandwidthConfig full = default_bandwidth_config(data);
    REQUIRE(full.h_grid.size() == 8);
    CHECK(full.h_grid.front() == doctest::Approx(0.2 * ref));
    CHECK(full.h_grid.back() == doctest::Approx(20.0 * ref));
    CHECK(full.lambda_grid.size() == 5);
    const BandwidthConfig coarse = coarse_bandwidth_config(data);
    CHECK(coarse.h_grid.size() == 4);
    CHECK(coarse.b_grid.size() == 8);
  }

  TEST_CASE("likelihood and least squares criteria share one set of fits") {
    std::mt19937_64 rng(17);
    const Dataset data = random_dataset(rng, 60);
    const CrossValidation cv(data, small_config({0.3, 0.8}, {0.5}, {0.5}, {0.5}));
    const SelectedBandwidths ml = cv.select(CvCriterion::LocalLikelihood);
    const SelectedBandwidths ls = cv.select(CvCriterion::LeastSquares);
    CHECK(ml.ps_trace.size() == ls.ps_trace.size());
    for (std::size_t k = 0; k < ml.ps_trace.size(); ++k) {
      const GpsFit& fit = cv.gps_fit(k);
      CHECK(ml.ps_trace[k].least_squares == cv_ps_block(data, fit.probabilities, CvCriterion::LeastSquares));
      CHECK(ml.ps_trace[k].likelihood == cv_ps_block(data, fit.probabilities, CvCriterion::LocalLikelihood));
    }
  }

  TEST_CASE("a sensible bandwidth beats an oversmoothing one on average") {
    double wins = 0.0;
    double gap = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      std::mt19937_64 rng(1000 + seed);
      const Dataset data = random_dataset(rng, 150, {1, 0, 0, 2});
      const MultiIndexBasis basis(0, 1);
      double huge = 0.0;
      double good = 0.0;
      for (Cell c : kAllCells) {
        huge += cv_or_block(data, fit_local_ls_loo(data, c, basis, {1e3, {}}));
        good += cv_or_block(data, fit_local_ls_loo(data, c, basis, {0.3, {}}));
      }
      gap += huge - good;
      wins += good < huge ? 1.0 : 0.0;
    }
    CHECK(gap > 0.0);
    CHECK(wins >= 40.0);
  }

  TEST_CASE("selection does not depend on the worker count") {
    std::mt19937_64 rng(19);
    const Dataset data = random_dataset(rng, 80, {2, 1, 1, 3});
    const BandwidthConfig cfg = default_bandwidth_config(data, 3);
    LocalFitOptions many;
    many.workers = 3;
    const SelectedBandwidths a = select_bandwidths(data, cfg);
    const SelectedBandwidths b = select_bandwidths(data, cfg, many);
    CHECK(a.criterion_value == b.criterion_value);
    CHECK(a.gps == b.gps);
    CHECK(a.outcome == b.outcome);
  }

  TEST_CASE("criterion names round trip") {
    CHECK(parse_criterion(criterion_name(CvCriterion::LeastSquares)) == CvCriterion::LeastSquares);
    CHECK(parse_criterion(criterion_name(CvCriterion::LocalLikelihood)) == CvCriterion::LocalLikelihood);
    CHECK(parse_criterion("ml") == CvCriterion::LocalLikelihood);
    CHECK(parse_criterion("ls") == CvCriterion::LeastSquares);
  }
}
