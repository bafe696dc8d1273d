#include "patchsis/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace patchsis {

namespace {

double match_distance(const std::complex<double>& value, const Spectrum& spectrum) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ev : spectrum.eigenvalues)
    best = std::min(best, std::abs(ev - value));
  return best;
}

// Largest deviation of a closed-form eigenvalue set from the numeric spectrum.
double agreement_gap(const std::vector<std::complex<double>>& closed,
                     const Spectrum& spectrum) {
  double worst = 0.0;
  for (const auto& v : closed) worst = std::max(worst, match_distance(v, spectrum));
  return worst;
}

}  // namespace

std::string to_string(StabilityClass cls) {
  switch (cls) {
    case StabilityClass::Stable: return "STABLE";
    case StabilityClass::Unstable: return "UNSTABLE";
    case StabilityClass::Marginal: return "MARGINAL";
  }
  return "MARGINAL";
}

Spectrum eigenvalues_4x4(const Mat4& m) {
  auto ev = dense_eigenvalues(m.a.data(), 4);
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  Spectrum s;
  for (int k = 0; k < 4; ++k) s.eigenvalues[static_cast<std::size_t>(k)] = ev[static_cast<std::size_t>(k)];
  s.max_real = ev[0].real();
  s.margin = std::abs(s.max_real);
  return s;
}

std::array<double, 4> origin_eigenvalues_m1(const Parameters& p) {
  if (p.scenario != Scenario::M1Unidirectional)
    throw std::domain_error("origin_eigenvalues_m1 requires the M1 scenario");
  return {p.r2, -(p.delta2 + p.mu2), (p.r1 * p.A - p.m21) / p.A,
          -(p.delta1 * p.B + p.n21 + p.mu1 * p.B) / p.B};
}

std::array<double, 4> origin_eigenvalues_m2(const Parameters& p) {
  if (p.scenario != Scenario::M2NoInfectedMigration)
    throw std::domain_error("origin_eigenvalues_m2 requires the M2 scenario");
  const double k = p.r1 * p.A + p.r2 * p.A - p.m12 - p.m21;
  // The susceptible block has nonnegative off-diagonal entries, so the
  // radicand is a sum of squares-like quantity and never negative.
  const double radicand =
      std::max(0.0, k * k + 4.0 * p.A * (p.r1 * p.m12 + p.r2 * p.m21 -
                                         p.r1 * p.r2 * p.A));
  const double root = std::sqrt(radicand);
  return {-(p.delta1 + p.mu1), -(p.delta2 + p.mu2), (k + root) / (2.0 * p.A),
          (k - root) / (2.0 * p.A)};
}

X1ExplicitChecks x1_explicit_checks(const Parameters& p) {
  if (p.scenario != Scenario::M1Unidirectional)
    throw std::domain_error("x1_explicit_checks requires the M1 scenario");
  if (!(p.gamma2 > 0.0 && p.mu2 > 0.0))
    throw std::domain_error("x1_explicit_checks requires gamma2 > 0 and mu2 > 0");

  X1ExplicitChecks out;
  const double s2 = (p.delta2 + p.mu2) / p.gamma2;
  const double i2 = p.r2 * (p.delta2 + p.mu2) / (p.gamma2 * p.mu2);
  out.lambda1 = -(p.delta1 + p.mu1) - p.n21 / (p.B + s2 + i2);

  // The printed numerator over the algebraically forced denominator
  // A*gamma2*mu2 + (delta2+mu2)(mu2+r2); equals r1 - m21/(A + S2 + I2).
  const double den = p.A * p.gamma2 * p.mu2 + (p.delta2 + p.mu2) * (p.mu2 + p.r2);
  out.lambda2 = p.r1 - p.m21 * p.gamma2 * p.mu2 / den;

  const double disc = p.r2 * p.r2 * p.delta2 * p.delta2 -
                      4.0 * p.mu2 * p.mu2 * p.r2 * (p.mu2 + p.delta2);
  if (disc < 0.0) {
    const double re = -p.r2 * p.delta2 / (2.0 * p.mu2);
    const double im = std::sqrt(-disc) / (2.0 * p.mu2);
    out.lambda3 = {re, im};
    out.lambda4 = {re, -im};
  } else {
    const double root = std::sqrt(disc);
    out.lambda3 = {(-p.r2 * p.delta2 + root) / (2.0 * p.mu2), 0.0};
    out.lambda4 = {(-p.r2 * p.delta2 - root) / (2.0 * p.mu2), 0.0};
  }

  out.stability_margin =
      p.mu2 * p.m21 * p.gamma2 -
      (p.mu2 * p.r1 * p.A * p.gamma2 + p.mu2 * p.r1 * p.delta2 +
       p.r1 * p.mu2 * p.mu2 + p.r1 * p.r2 * (p.delta2 + p.mu2));
  return out;
}

CubicFactor extract_cubic_factor(const Mat4& jac, int explicit_row) {
  double scale = 0.0;
  for (double v : jac.a) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * (1.0 + scale);
  for (int j = 0; j < 4; ++j) {
    if (j == explicit_row) continue;
    if (std::abs(jac(explicit_row, j)) > tol)
      throw StructureViolation("row " + std::to_string(explicit_row) +
                               " has a nonzero off-diagonal entry in column " +
                               std::to_string(j));
  }

  CubicFactor out;
  out.lambda_explicit = jac(explicit_row, explicit_row);

  int idx[3], n = 0;
  for (int k = 0; k < 4; ++k)
    if (k != explicit_row) idx[n++] = k;

  double m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = jac(idx[i], idx[j]);

  const double tr = m[0][0] + m[1][1] + m[2][2];
  const double minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) +
                        (m[0][0] * m[2][2] - m[0][2] * m[2][0]) +
                        (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  out.cubic = {-tr, minors, -det};
  return out;
}

std::optional<int> find_deflatable_row(const Mat4& jac) {
  double scale = 0.0;
  for (double v : jac.a) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * (1.0 + scale);
  for (int row = 0; row < 4; ++row) {
    bool ok = true;
    for (int j = 0; j < 4 && ok; ++j)
      if (j != row && std::abs(jac(row, j)) > tol) ok = false;
    if (ok) return row;
  }
  return std::nullopt;
}

RouthHurwitzCubic routh_hurwitz_cubic(double a2, double a1, double a0) {
  RouthHurwitzCubic out;
  out.terms = {a0, a2, a2 * a1 - a0};
  out.stable = out.terms[0] > 0.0 && out.terms[1] > 0.0 && out.terms[2] > 0.0;
  return out;
}

double quartic_hopf_determinant(const Mat4& jac) {
  const auto c = characteristic_polynomial(jac.a.data(), 4);
  const double b3 = c[0], b2 = c[1], b1 = c[2], b0 = c[3];
  return b3 * b2 * b1 - b1 * b1 - b3 * b3 * b0;
}

double hopf_residual(const Equilibrium& eq, const Parameters& p) {
  const Mat4 jac = jacobian(eq.state, p);
  if (const auto row = find_deflatable_row(jac)) {
    const auto factor = extract_cubic_factor(jac, *row);
    return factor.cubic[0] * factor.cubic[1] - factor.cubic[2];
  }
  return quartic_hopf_determinant(jac);
}

std::optional<CubicPairInfo> cubic_complex_pair(const std::array<double, 3>& cubic) {
  const auto roots = cubic_roots(cubic[0], cubic[1], cubic[2]);
  double scale = 1.0;
  for (const auto& r : roots) scale = std::max(scale, std::abs(r));
  // Pick the root with the smallest |imag| as the real one; the other two
  // form the candidate pair.
  int real_idx = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(roots[static_cast<std::size_t>(k)].imag()) <
        std::abs(roots[static_cast<std::size_t>(real_idx)].imag()))
      real_idx = k;
  const auto& a = roots[static_cast<std::size_t>((real_idx + 1) % 3)];
  const auto& b = roots[static_cast<std::size_t>((real_idx + 2) % 3)];
  if (std::abs(a.imag()) < 1e-9 * scale && std::abs(b.imag()) < 1e-9 * scale)
    return std::nullopt;  // all real
  CubicPairInfo info;
  info.pair_real_part = 0.5 * (a.real() + b.real());
  info.third_root = roots[static_cast<std::size_t>(real_idx)].real();
  return info;
}

StabilityVerdict classify(const Equilibrium& eq, const Parameters& p) {
  StabilityVerdict out;
  const Mat4 jac = jacobian(eq.state, p);
  out.spectrum = eigenvalues_4x4(jac);
  if (out.spectrum.max_real < -kStabilityTol)
    out.cls = StabilityClass::Stable;
  else if (out.spectrum.max_real > kStabilityTol)
    out.cls = StabilityClass::Unstable;
  else
    out.cls = StabilityClass::Marginal;

  auto add = [&](std::string name, double value, bool pass) {
    out.checks.push_back({std::move(name), value, pass});
  };

  const bool m1 = p.scenario == Scenario::M1Unidirectional;
  switch (eq.kind) {
    case EquilibriumKind::Origin: {
      const auto closed = m1 ? origin_eigenvalues_m1(p) : origin_eigenvalues_m2(p);
      std::vector<std::complex<double>> cv(closed.begin(), closed.end());
      const double gap = agreement_gap(cv, out.spectrum);
      add("origin_closed_form_agreement", gap, gap < 1e-9);
      break;
    }
    case EquilibriumKind::X1: {
      if (m1 && p.gamma2 > 0.0 && p.mu2 > 0.0) {
        const auto xc = x1_explicit_checks(p);
        add("stab_x1_margin", xc.stability_margin, xc.stability_margin > 0.0);
        const double gap = agreement_gap(
            {xc.lambda1, xc.lambda2, xc.lambda3, xc.lambda4}, out.spectrum);
        add("x1_explicit_agreement", gap, gap < 1e-9);
      }
      break;
    }
    case EquilibriumKind::X2: {
      if (m1) {
        const auto feas = x2_feasibility(p);
        add("x2_feasibility_margin_1", feas.margins[0], feas.margins[0] >= 0.0);
        add("x2_feasibility_margin_2", feas.margins[1], feas.margins[1] >= 0.0);
      }
      break;
    }
    case EquilibriumKind::CoexM1: {
      if (m1) {
        const auto filter = coexistence_filter(eq.state, p);
        add("coex_necessary_conditions",
            filter.branch == CoexBranch::Coex1 ? 1.0
            : filter.branch == CoexBranch::Coex1Bis ? 2.0
                                                    : 0.0,
            filter.branch == CoexBranch::Coex1 ||
                filter.branch == CoexBranch::Coex1Bis);
        add("coex_z_window", filter.z_value, filter.z_window_ok);
      }
      break;
    }
    default:
      break;
  }

  // Boundary equilibria deflate; attach the explicit eigenvalue and the
  // Routh-Hurwitz terms of the remaining cubic.
  const bool boundary = eq.kind == EquilibriumKind::X1 || eq.kind == EquilibriumKind::X2 ||
                        eq.kind == EquilibriumKind::U || eq.kind == EquilibriumKind::W;
  if (boundary) {
    if (const auto row = find_deflatable_row(jac)) {
      const auto factor = extract_cubic_factor(jac, *row);
      add("lambda_explicit", factor.lambda_explicit, factor.lambda_explicit < 0.0);
      const auto rh =
          routh_hurwitz_cubic(factor.cubic[0], factor.cubic[1], factor.cubic[2]);
      add("routh_hurwitz_a0", rh.terms[0], rh.terms[0] > 0.0);
      add("routh_hurwitz_a2", rh.terms[1], rh.terms[1] > 0.0);
      add("routh_hurwitz_a2a1_minus_a0", rh.terms[2], rh.terms[2] > 0.0);
    }
  }
  add("hopf_residual", hopf_residual(eq, p), true);
  return out;
}

}  // namespace patchsis
