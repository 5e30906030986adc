#include <vector>

#include <doctest.h>

#include "didcc/error.hpp"
#include "didcc/multi_index.hpp"

using namespace didcc;

namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_SUITE("multi_index") {
  TEST_CASE("basis size matches the combinatorial count") {
    for (int p = 0; p <= 4; ++p) {
      for (std::size_t dim = 1; dim <= 4; ++dim) {
        std::size_t expected = 0;
        for (int k = 0; k <= p; ++k) expected += binomial(static_cast<std::size_t>(k) + dim - 1, dim - 1);
        const MultiIndexBasis basis(p, dim);
        CHECK(basis.size() == expected);
        CHECK(MultiIndexBasis::basis_size(p, dim) == expected);
        CHECK(basis.index_table().front() == std::vector<int>(dim, 0));
        int last_degree = 0;
        for (const auto& k : basis.index_table()) {
          int degree = 0;
          for (int v : k) degree += v;
          CHECK(degree >= last_degree);
          CHECK(degree <= p);
          last_degree = degree;
        }
      }
    }
  }

  TEST_CASE("intercept only without continuous covariates") {
    const MultiIndexBasis basis(2, 0);
    CHECK(basis.size() == 1);
    const std::vector<double> none;
    CHECK(basis.build(none, none)[0] == 1.0);
  }

  TEST_CASE("displacement examples") {
    const MultiIndexBasis lin(1, 2);
    const std::vector<double> c{0.3, -0.2};
    const Eigen::VectorXd z0 = lin.build(c, c);
    REQUIRE(z0.size() == 3);
    CHECK(z0[0] == 1.0);
    CHECK(z0[1] == 0.0);
    CHECK(z0[2] == 0.0);

    const MultiIndexBasis quad1(2, 1);
    const std::vector<double> x{1.5};
    const std::vector<double> ctr{1.0};
    const Eigen::VectorXd z1 = quad1.build(x, ctr);
    REQUIRE(z1.size() == 3);
    CHECK(z1[0] == 1.0);
    CHECK(z1[1] == 0.5);
    CHECK(z1[2] == 0.25);
  }

  TEST_CASE("golden ordering for two dimensions, order two") {
    const MultiIndexBasis basis(2, 2);
    REQUIRE(basis.size() == 6);
    const std::vector<std::vector<int>> golden{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    CHECK(basis.index_table() == golden);

    const double a = 0.7;
    const double b = -1.3;
    const std::vector<double> x{1.0 + a, 2.0 + b};
    const std::vector<double> ctr{1.0, 2.0};
    const Eigen::VectorXd z = basis.build(x, ctr);
    const double da = x[0] - ctr[0];
    const double db = x[1] - ctr[1];
    const std::vector<double> expected{1.0, da, db, da * da, da * db, db * db};
    for (std::size_t k = 0; k < 6; ++k) CHECK(z[static_cast<Eigen::Index>(k)] == doctest::Approx(expected[k]).epsilon(1e-15));
  }

  TEST_CASE("golden ordering for three dimensions, order two") {
    const MultiIndexBasis basis(2, 3);
    const std::vector<std::vector<int>> golden{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0},
                                               {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 2}};
    CHECK(basis.index_table() == golden);
  }

  TEST_CASE("dimension mismatch") {
    const MultiIndexBasis basis(1, 2);
    const std::vector<double> x{1.0};
    const std::vector<double> c{0.0, 0.0};
    CHECK_THROWS_AS(basis.build(x, c), ShapeError);
    CHECK_THROWS_AS(basis.build(c, x), ShapeError);
  }
}
