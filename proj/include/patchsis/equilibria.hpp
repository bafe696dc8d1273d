#ifndef PATCHSIS_EQUILIBRIA_HPP
#define PATCHSIS_EQUILIBRIA_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "patchsis/model.hpp"

namespace patchsis {

enum class EquilibriumKind { Origin, X1, X2, CoexM1, U, W, CoexM2, Other };
std::string to_string(EquilibriumKind kind);

enum class Provenance { ClosedForm, ReducedRoot, Newton };
std::string to_string(Provenance provenance);

/// A steady state together with its max-norm rhs residual. Anything handed
/// out as a valid equilibrium has residual_norm < 1e-8, re-checked against
/// rhs independently of whichever solver produced it.
struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::Other;
  State state;
  double residual_norm = 0.0;
  Provenance provenance = Provenance::Newton;
  std::string params_digest;
};

/// Zero-pattern classification of a steady state (tolerance on "zero"
/// components matches the enumeration dedup tolerance).
EquilibriumKind classify_kind(const State& x, Scenario scenario, double zero_tol = 1e-6);

/// The origin, an equilibrium of every scenario.
Equilibrium origin_equilibrium(const Parameters& p);

/// M1 boundary point with only the arrival patch populated:
/// (0, 0, (delta2+mu2)/gamma2, r2 (delta2+mu2)/(gamma2 mu2)).
Equilibrium x1_closed_form(const Parameters& p);

/// M1 boundary point with patch 1 populated but disease free. The S1
/// component uses the r1^2 gamma2 denominator forced by the dS2 = 0
/// balance (see docs/errata.md); the result is Newton-polished and
/// residual-checked. `feasible` is false when a component is negative.
struct X2ClosedForm {
  Equilibrium eq;
  bool feasible = false;
};
X2ClosedForm x2_closed_form(const Parameters& p);

/// The two feasibility inequalities for X2, reported as LHS - RHS margins.
struct X2Feasibility {
  bool feasible = false;
  std::array<double, 2> margins{};
};
X2Feasibility x2_feasibility(const Parameters& p);

/// Necessary-condition filter for an interior (coexistence) candidate
/// under M1. Purely diagnostic: passing does not certify an equilibrium.
enum class CoexBranch { Coex1, Coex1Bis, None, UndefinedZ };
std::string to_string(CoexBranch branch);

struct CoexFilterResult {
  CoexBranch branch = CoexBranch::None;
  double z_value = 0.0;
  bool z_window_ok = false;
};
CoexFilterResult coexistence_filter(const State& candidate, const Parameters& p);

/// Reduced intersection polynomials for the M2 boundary points:
/// parabola g = {a2, a1, a0} and cubic f = {b3, b2, b1, b0} in the free
/// susceptible variable. W uses the 1<->2 / m12<->m21 swapped formulas.
enum class UwPoint { U, W };

struct ReducedPolynomials {
  std::array<double, 3> g{};
  std::array<double, 4> f{};
};
ReducedPolynomials uw_reduced_polynomials(const Parameters& p, UwPoint which);

/// Roots of the constrained 1-D reduction, each re-verified on the full
/// 4-D rhs. cross_check_ok is cleared when a verified root misses the
/// f - g polynomial intersection beyond 1e-6 relative.
struct UwSolveResult {
  std::vector<Equilibrium> equilibria;
  bool cross_check_ok = true;
  double worst_mismatch = 0.0;
};
UwSolveResult solve_u(const Parameters& p);
UwSolveResult solve_w(const Parameters& p);

/// Damped Newton iteration on rhs = 0 using the analytic Jacobian.
/// Pinned components are held fixed (used for boundary equilibria).
enum class NewtonStatus { Converged, NonConverged, SingularJacobian };

struct NewtonResult {
  NewtonStatus status = NewtonStatus::NonConverged;
  Equilibrium eq;  // valid only when status == Converged
  int iterations = 0;
};

using ComponentMask = std::array<bool, 4>;  // true = hold component fixed

NewtonResult newton_refine(const State& guess, const Parameters& p,
                           std::optional<ComponentMask> pinned = std::nullopt);

struct SearchBox {
  std::array<double, 4> lo{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> hi{10.0, 10.0, 10.0, 10.0};
};

/// Runs the scenario's closed-form/reduced solvers, then multi-start
/// Newton from a low-discrepancy sequence in the box (`seed` offsets the
/// sequence). Deduplicates at 1e-6 max-norm, drops infeasible points and
/// sorts lexicographically by state, so the output is deterministic.
/// Multi-start search is a heuristic: it cannot certify completeness.
std::vector<Equilibrium> enumerate_equilibria(const Parameters& p,
                                              const SearchBox& box = {},
                                              int n_starts = 200,
                                              unsigned seed = 0);

/// Display ids for a catalog: the kind label, suffixed "#2", "#3", ...
/// when a kind repeats (in catalog order).
std::vector<std::string> catalog_ids(const std::vector<Equilibrium>& catalog);

}  // namespace patchsis

#endif
