// Test-side oracles, kept independent of the library implementation paths
// they check.
#ifndef PATCHSIS_TESTS_ORACLES_HPP
#define PATCHSIS_TESTS_ORACLES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "patchsis/linalg.hpp"
#include "patchsis/model.hpp"

namespace oracles {

// Direct per-equation transcription of the two models (no shared
// subexpressions), used as the substitution oracle for the library rhs.
inline patchsis::State reference_rhs(const patchsis::State& x,
                                     const patchsis::Parameters& p) {
  patchsis::State d;
  if (p.scenario == patchsis::Scenario::M1Unidirectional) {
    d.s1 = p.r1 * x.s1 - p.gamma1 * x.s1 * x.i1 + p.delta1 * x.i1 -
           p.m21 * x.s1 / (p.A + x.i2 + x.s2);
    d.i1 = p.gamma1 * x.s1 * x.i1 - (p.delta1 + p.mu1) * x.i1 -
           p.n21 * x.i1 / (p.B + x.i2 + x.s2);
    d.s2 = p.r2 * x.s2 - p.gamma2 * x.s2 * x.i2 + p.delta2 * x.i2 +
           p.m21 * x.s1 / (p.A + x.i2 + x.s2);
    d.i2 = p.gamma2 * x.s2 * x.i2 - (p.delta2 + p.mu2) * x.i2 +
           p.n21 * x.i1 / (p.B + x.i2 + x.s2);
  } else {
    d.s1 = p.r1 * x.s1 - p.gamma1 * x.s1 * x.i1 + p.delta1 * x.i1 -
           p.m21 * x.s1 / (p.A + x.i2 + x.s2) +
           p.m12 * x.s2 / (p.A + x.s1 + x.i1);
    d.i1 = p.gamma1 * x.s1 * x.i1 - (p.delta1 + p.mu1) * x.i1;
    d.s2 = p.r2 * x.s2 - p.gamma2 * x.s2 * x.i2 + p.delta2 * x.i2 +
           p.m21 * x.s1 / (p.A + x.i2 + x.s2) -
           p.m12 * x.s2 / (p.A + x.s1 + x.i1);
    d.i2 = p.gamma2 * x.s2 * x.i2 - (p.delta2 + p.mu2) * x.i2;
  }
  return d;
}

// Central finite differences of the library rhs, step 1e-6 * (1 + |x_j|).
inline patchsis::Mat4 fd_jacobian(const patchsis::State& x,
                                  const patchsis::Parameters& p) {
  patchsis::Mat4 j;
  for (int col = 0; col < 4; ++col) {
    const double h = 1e-6 * (1.0 + std::abs(x[col]));
    patchsis::State plus = x, minus = x;
    plus[col] += h;
    minus[col] -= h;
    const patchsis::State fp = patchsis::rhs(plus, p);
    const patchsis::State fm = patchsis::rhs(minus, p);
    for (int row = 0; row < 4; ++row) j(row, col) = (fp[row] - fm[row]) / (2.0 * h);
  }
  return j;
}

// Trigonometric/Cardano roots of the monic cubic x^3 + a2 x^2 + a1 x + a0,
// independent of the library's companion-matrix path.
inline std::array<std::complex<double>, 3> cardano_roots(double a2, double a1,
                                                         double a0) {
  const double p = a1 - a2 * a2 / 3.0;
  const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
  const double shift = -a2 / 3.0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  std::array<std::complex<double>, 3> roots;
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + s);
    const double v = std::cbrt(-q / 2.0 - s);
    roots[0] = shift + u + v;
    const std::complex<double> im(0.0, std::sqrt(3.0) / 2.0 * (u - v));
    roots[1] = std::complex<double>(shift - (u + v) / 2.0, 0.0) + im;
    roots[2] = std::conj(roots[1]);
  } else {
    const double pi = std::acos(-1.0);
    const double r = 2.0 * std::sqrt(std::max(0.0, -p / 3.0));
    const double arg =
        std::clamp(3.0 * q / (p * r == 0.0 ? 1.0 : p * r), -1.0, 1.0);
    const double phi = std::acos(arg);
    for (int k = 0; k < 3; ++k)
      roots[static_cast<std::size_t>(k)] =
          shift + r * std::cos((phi - 2.0 * pi * k) / 3.0);
  }
  return roots;
}

// Random parameter draw in the documented test ranges: rates in [0.1, 5],
// migrations in [0, 30], A and B in [0.5, 20].
inline patchsis::Parameters random_params(patchsis::Scenario scenario,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.1, 5.0);
  std::uniform_real_distribution<double> migration(0.0, 30.0);
  std::uniform_real_distribution<double> half_sat(0.5, 20.0);
  patchsis::Parameters p;
  p.scenario = scenario;
  p.r1 = rate(rng);
  p.r2 = rate(rng);
  p.gamma1 = rate(rng);
  p.gamma2 = rate(rng);
  p.delta1 = rate(rng);
  p.delta2 = rate(rng);
  p.mu1 = rate(rng);
  p.mu2 = rate(rng);
  p.A = half_sat(rng);
  p.B = half_sat(rng);
  p.m21 = migration(rng);
  if (scenario == patchsis::Scenario::M1Unidirectional) {
    p.n21 = migration(rng);
  } else {
    p.m12 = migration(rng);
  }
  return p;
}

inline patchsis::State random_state(std::mt19937_64& rng, double lo = 0.0,
                                    double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace oracles

#endif
