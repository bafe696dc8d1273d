#ifndef PATCHSIS_STABILITY_HPP
#define PATCHSIS_STABILITY_HPP

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "patchsis/equilibria.hpp"
#include "patchsis/linalg.hpp"
#include "patchsis/model.hpp"

namespace patchsis {

/// Eigenvalues sorted by descending real part, then descending imaginary
/// part (conjugate pairs end up adjacent). margin = |max_real|.
struct Spectrum {
  std::array<std::complex<double>, 4> eigenvalues{};
  double max_real = 0.0;
  double margin = 0.0;
};

Spectrum eigenvalues_4x4(const Mat4& m);

enum class StabilityClass { Stable, Unstable, Marginal };
std::string to_string(StabilityClass cls);

/// Classification tolerance on the leading real part.
inline constexpr double kStabilityTol = 1e-8;

struct NamedCheck {
  std::string name;
  double value = 0.0;
  bool pass = false;
};

struct StabilityVerdict {
  StabilityClass cls = StabilityClass::Marginal;
  Spectrum spectrum;
  std::vector<NamedCheck> checks;
};

/// Spectrum-based classification with the scenario's closed-form
/// conditions attached as named sub-results for cross-validation.
StabilityVerdict classify(const Equilibrium& eq, const Parameters& p);

/// Closed-form origin eigenvalues under M1:
/// r2, -(delta2+mu2), (r1 A - m21)/A, -(delta1 B + n21 + mu1 B)/B.
std::array<double, 4> origin_eigenvalues_m1(const Parameters& p);

/// Closed-form origin eigenvalues under M2: -(delta1+mu1), -(delta2+mu2)
/// and the susceptible-block pair [k +- sqrt(k^2 + 4A(r1 m12 + r2 m21
/// - r1 r2 A))]/(2A), k = r1 A + r2 A - m12 - m21. The radicand is the
/// corrected form (docs/errata.md); it is never negative because the
/// block's off-diagonal entries are nonnegative.
std::array<double, 4> origin_eigenvalues_m2(const Parameters& p);

/// Explicit spectrum at X1 plus the closed-form stability margin
/// mu2 m21 gamma2 - (mu2 r1 A gamma2 + mu2 r1 delta2 + r1 mu2^2
/// + r1 r2 (delta2+mu2)); its sign equals sign(-lambda2) identically.
struct X1ExplicitChecks {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::complex<double> lambda3, lambda4;
  double stability_margin = 0.0;
};
X1ExplicitChecks x1_explicit_checks(const Parameters& p);

class StructureViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits a Jacobian whose `explicit_row` has its only nonzero entry on
/// the diagonal into that explicit eigenvalue and the characteristic
/// cubic {a2, a1, a0} of the remaining 3x3 principal submatrix.
/// Throws StructureViolation when the row precondition fails.
struct CubicFactor {
  double lambda_explicit = 0.0;
  std::array<double, 3> cubic{};
};
CubicFactor extract_cubic_factor(const Mat4& jac, int explicit_row);

/// First row (if any) satisfying the extract_cubic_factor precondition.
std::optional<int> find_deflatable_row(const Mat4& jac);

/// Routh-Hurwitz test for the monic cubic: stable iff a0 > 0, a2 > 0 and
/// a2 a1 - a0 > 0. terms = {a0, a2, a2 a1 - a0}.
struct RouthHurwitzCubic {
  bool stable = false;
  std::array<double, 3> terms{};
};
RouthHurwitzCubic routh_hurwitz_cubic(double a2, double a1, double a0);

/// a2 a1 - a0 of the deflated cubic at eq; falls back to the quartic's
/// bordered Hurwitz determinant when no row deflates. A sign change along
/// a parameter path flags a candidate Hopf point.
double hopf_residual(const Equilibrium& eq, const Parameters& p);

/// Third Hurwitz determinant b3 b2 b1 - b1^2 - b3^2 b0 of the full
/// characteristic quartic (the no-deflation fallback above).
double quartic_hopf_determinant(const Mat4& jac);

/// Root structure of a monic cubic: a conjugate pair plus a real root.
/// Empty when all three roots are real.
struct CubicPairInfo {
  double pair_real_part = 0.0;
  double third_root = 0.0;
};
std::optional<CubicPairInfo> cubic_complex_pair(const std::array<double, 3>& cubic);

}  // namespace patchsis

#endif
