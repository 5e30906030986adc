#pragma once

#include <array>
#include <cmath>
#include <random>

// Independent transcription of the simulation designs, written term by term
// from the published formulas. Index k of `x` holds X_{k+1}.
namespace didcc::testing::dgp {

using X = std::array<double, 6>;

inline double xs(const X& x, int j) { return x[static_cast<std::size_t>(j - 1)]; }

inline double f10(const X& x) {
  double a = 0.0;
  for (int s = 1; s <= 2; ++s) a += xs(x, s) - xs(x, s) * xs(x, s);
  double b = 0.0;
  for (int k = 3; k <= 6; ++k) b += xs(x, k);
  // Alternating over j in {3, 5}: +X3X4 - X5X6.
  double c = xs(x, 3) * xs(x, 4) - xs(x, 5) * xs(x, 6);
  for (int l = 1; l <= 2; ++l) {
    for (int lp = 3; lp <= 6; ++lp) c += ((l + 1) % 2 == 0 ? 1.0 : -1.0) * xs(x, l) * xs(x, lp);
  }
  for (int l = 3; l <= 4; ++l) {
    for (int lp = 5; lp <= 6; ++lp) c += ((l + lp) % 2 == 0 ? 1.0 : -1.0) * xs(x, l) * xs(x, lp);
  }
  return 0.4 * a + 0.2 * b + 0.1 * c;
}

inline double f01(const X& x) {
  const double x1 = xs(x, 1), x2 = xs(x, 2);
  double b = 0.0;
  for (int k = 3; k <= 6; ++k) b += ((k + 1) % 2 == 0 ? 1.0 : -1.0) * xs(x, k);
  double c = 0.0;
  for (int l = 3; l <= 6; ++l) c += x2 * xs(x, l);
  for (int l = 3; l <= 4; ++l) c += xs(x, l) * xs(x, 6);
  return 0.4 * (2.0 * x1 + x2 + x1 * x1 - x2 * x2 + x1 * x2) + 0.2 * b + 0.1 * c;
}

inline double f00(const X& x) {
  const double x1 = xs(x, 1), x2 = xs(x, 2);
  double b = 0.0;
  for (int k = 3; k <= 6; ++k) b += (k % 2 == 0 ? 1.0 : -1.0) * xs(x, k);
  double c = 0.0;
  for (int l = 3; l <= 6; ++l) c += x1 * xs(x, l);
  for (int l = 3; l <= 4; ++l) c += xs(x, l) * xs(x, 5);
  return 0.4 * (x1 + 2.0 * x2 - x1 * x1 + x2 * x2 - x1 * x2) + 0.2 * b + 0.1 * c;
}

inline double fbase(const X& x) {
  const double x1 = xs(x, 1), x2 = xs(x, 2);
  return 27.4 * x1 + 27.4 * x2 + 13.7 * x1 * x1 + 13.7 * x2 * x2 + 13.7 * x1 * x2;
}

inline double fatt(const X& x) {
  double s = 0.0;
  for (int k = 3; k <= 6; ++k) s += xs(x, k);
  return 27.4 * xs(x, 1) + 13.7 * xs(x, 2) + 6.85 * s - 15.0;
}

// (p11, p10, p01, p00) under the non-stationary design.
inline std::array<double, 4> ps1(const X& x) {
  const double e10 = std::exp(f10(x)), e01 = std::exp(f01(x)), e00 = std::exp(f00(x));
  const double den = 1.0 + e10 + e01 + e00;
  return {1.0 / den, e10 / den, e01 / den, e00 / den};
}

inline X draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution b(0.5);
  std::binomial_distribution<int> bin(3, 0.5);
  X x{};
  x[0] = u(rng);
  x[1] = u(rng);
  x[2] = b(rng) ? 1.0 : 0.0;
  x[3] = b(rng) ? 1.0 : 0.0;
  x[4] = bin(rng);
  x[5] = bin(rng);
  return x;
}

}  // namespace didcc::testing::dgp
