#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "patchsis/equilibria.hpp"

using namespace patchsis;

namespace {

const Equilibrium* find_kind(const std::vector<Equilibrium>& catalog,
                             EquilibriumKind kind) {
  for (const auto& eq : catalog)
    if (eq.kind == kind) return &eq;
  return nullptr;
}

}  // namespace

TEST_CASE("origin equilibrium") {
  const auto eq = origin_equilibrium(fixture("M1_X1").params);
  CHECK(eq.kind == EquilibriumKind::Origin);
  CHECK(eq.residual_norm == 0.0);
  CHECK(max_norm(eq.state) == 0.0);
}

TEST_CASE("x1_closed_form on the fixtures") {
  const auto x1 = x1_closed_form(fixture("M1_X1").params);
  CHECK(x1.state.s1 == 0.0);
  CHECK(x1.state.i1 == 0.0);
  CHECK(x1.state.s2 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(x1.state.i2 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(x1.residual_norm < 1e-12);

  // (delta2+mu2)/gamma2 = 4, r2*(delta2+mu2)/(gamma2*mu2) = 2 for M1_COEX.
  const auto coex_x1 = x1_closed_form(fixture("M1_COEX").params);
  CHECK(coex_x1.state.s2 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(coex_x1.state.i2 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(coex_x1.residual_norm < 1e-12);

  Parameters p = fixture("M1_X1").params;
  p.r2 = 0.0;
  const auto degenerate = x1_closed_form(p);
  CHECK(degenerate.state.i2 == 0.0);
  CHECK(degenerate.state.s2 == doctest::Approx(3.0));
}

TEST_CASE("x1_closed_form ignores every patch-1 parameter") {
  std::mt19937_64 rng(11);
  const auto base = x1_closed_form(fixture("M1_X1").params);
  std::uniform_real_distribution<double> u(0.1, 9.0);
  for (int trial = 0; trial < 50; ++trial) {
    Parameters p = fixture("M1_X1").params;
    p.r1 = u(rng);
    p.gamma1 = u(rng);
    p.delta1 = u(rng);
    p.mu1 = u(rng);
    p.m21 = u(rng);
    p.n21 = u(rng);
    p.A = u(rng);
    p.B = u(rng);
    const auto moved = x1_closed_form(p);
    CHECK(max_norm_diff(moved.state, base.state) == 0.0);
  }
}

TEST_CASE("x1_closed_form guards its divisions and scenario") {
  Parameters p = fixture("M1_X1").params;
  p.gamma2 = 0.0;
  CHECK_THROWS_AS(x1_closed_form(p), std::domain_error);
  p = fixture("M1_X1").params;
  p.mu2 = 0.0;
  CHECK_THROWS_AS(x1_closed_form(p), std::domain_error);
  CHECK_THROWS_AS(x1_closed_form(fixture("M2_U").params), std::domain_error);
}

TEST_CASE("x2_closed_form reproduces (55, 0, 8, 21) for the resolved M1_X2 fixture") {
  const auto x2 = x2_closed_form(fixture("M1_X2").params);
  REQUIRE(x2.feasible);
  CHECK(x2.eq.state.s1 == doctest::Approx(55.0).epsilon(1e-12));
  CHECK(x2.eq.state.i1 == 0.0);
  CHECK(x2.eq.state.s2 == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(x2.eq.state.i2 == doctest::Approx(21.0).epsilon(1e-12));
  CHECK(x2.eq.residual_norm < 1e-10);
}

TEST_CASE("x2_closed_form under M1_X1 separates the corrected denominator") {
  // With r1 = 2 the corrected r1^2 gamma2 denominator gives S1 = 1.5; the
  // published r1 gamma2 form would give 3 and fail the residual oracle.
  const auto x2 = x2_closed_form(fixture("M1_X1").params);
  REQUIRE(x2.feasible);
  CHECK(x2.eq.state.s1 == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(x2.eq.state.s2 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x2.eq.state.i2 == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(x2.eq.residual_norm < 1e-10);

  State published = x2.eq.state;
  published.s1 = 3.0;
  CHECK(max_norm(rhs(published, fixture("M1_X1").params)) > 1.0);
}

TEST_CASE("x2_closed_form reports infeasibility without failing") {
  Parameters p = fixture("M1_X1").params;
  p.m21 = 0.0;
  const auto x2 = x2_closed_form(p);
  CHECK_FALSE(x2.feasible);
  CHECK(x2.eq.state.i2 < 0.0);
}

TEST_CASE("Newton polish equals the corrected closed form") {
  const auto x2 = x2_closed_form(fixture("M1_X1").params);
  const auto nr = newton_refine({1.4, 0.0, 2.9, 6.1}, fixture("M1_X1").params,
                                ComponentMask{false, true, false, false});
  REQUIRE(nr.status == NewtonStatus::Converged);
  CHECK(max_norm_diff(nr.eq.state, x2.eq.state) < 1e-8);
}

TEST_CASE("x2_feasibility margins") {
  const auto f2 = x2_feasibility(fixture("M1_X2").params);
  CHECK(f2.margins[0] == doctest::Approx(10.5).epsilon(1e-14));
  CHECK(f2.margins[1] == doctest::Approx(27.5).epsilon(1e-14));
  CHECK(f2.feasible);

  const auto f1 = x2_feasibility(fixture("M1_X1").params);
  CHECK(f1.margins[0] == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(f1.margins[1] == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(f1.feasible);

  Parameters p = fixture("M1_X1").params;
  p.m21 = 0.0;
  CHECK_FALSE(x2_feasibility(p).feasible);
  CHECK(x2_feasibility(p).margins[0] < 0.0);
}

TEST_CASE("coexistence_filter accepts the M1_COEX interior point") {
  const auto& p = fixture("M1_COEX").params;
  const auto catalog = enumerate_equilibria(p);
  const auto* coex = find_kind(catalog, EquilibriumKind::CoexM1);
  REQUIRE(coex != nullptr);
  const auto filter = coexistence_filter(coex->state, p);
  // The corrected necessary conditions hold at the verified equilibrium:
  // I1 = 3.3605 sits below the split 4.6698, so the Coex1Bis branch fires.
  CHECK(filter.branch == CoexBranch::Coex1Bis);
  // Z = -1.680 here, so the I2 > Z requirement is vacuous and the Z > 0
  // window (empty for this fixture: both bounds equal 4) stays unsatisfied.
  CHECK(filter.z_value == doctest::Approx(-1.68043).epsilon(1e-4));
  CHECK_FALSE(filter.z_window_ok);
}

TEST_CASE("coexistence_filter branches are necessary on random interior equilibria") {
  // Any strictly positive state that multi-start Newton certifies as an
  // equilibrium must satisfy one of the two branches.
  std::mt19937_64 rng(8080);
  int seen = 0;
  for (int trial = 0; trial < 60 && seen < 8; ++trial) {
    const Parameters p = oracles::random_params(Scenario::M1Unidirectional, rng);
    const auto nr = newton_refine(oracles::random_state(rng, 0.5, 8.0), p);
    if (nr.status != NewtonStatus::Converged) continue;
    const State& x = nr.eq.state;
    if (!(x.s1 > 0.1 && x.i1 > 0.1 && x.s2 > 0.1 && x.i2 > 0.1)) continue;
    ++seen;
    const auto filter = coexistence_filter(x, p);
    CHECK(filter.branch != CoexBranch::None);
  }
  CHECK(seen > 0);
}

TEST_CASE("coexistence_filter boundary and window edges") {
  const auto& p = fixture("M1_COEX").params;
  // I1 exactly on the branch split r1 gamma2 I2 / (r2 gamma1): both strict
  // inequalities fail.
  const double i2 = 1.0;
  const double i1_split = p.r1 * p.gamma2 * i2 / (p.r2 * p.gamma1);
  const auto at_split = coexistence_filter({2.0, i1_split, 2.0, i2}, p);
  CHECK(at_split.branch == CoexBranch::None);

  // I1 outside both Z > 0 windows.
  const double w_lo = (p.delta1 + p.mu1) / (p.gamma1 * p.mu1);
  const double w_hi = (p.delta2 + p.mu2) / (p.gamma1 * p.mu2);
  const double outside = std::max(w_lo, w_hi) + 1.0;
  const auto out = coexistence_filter({2.0, outside, 2.0, 1.0}, p);
  CHECK_FALSE(out.z_window_ok);

  // Z denominator r1 (delta2+mu2) - gamma1 mu2 I1 = 0.
  const double i1_singular = p.r1 * (p.delta2 + p.mu2) / (p.gamma1 * p.mu2);
  const auto undef = coexistence_filter({2.0, i1_singular, 2.0, 1.0}, p);
  CHECK(undef.branch == CoexBranch::UndefinedZ);

  CHECK_THROWS_AS(coexistence_filter({0.0, 1.0, 1.0, 1.0}, p), std::invalid_argument);
  CHECK_THROWS_AS(coexistence_filter({1, 1, 1, 1}, fixture("M2_U").params),
                  std::domain_error);
}

TEST_CASE("uw_reduced_polynomials for M2_U") {
  const auto polys = uw_reduced_polynomials(fixture("M2_U").params, UwPoint::U);
  CHECK(polys.g[0] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(polys.g[1] == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(polys.g[2] == doctest::Approx(-560.0).epsilon(1e-14));
  CHECK(polys.f[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(polys.f[1] == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(polys.f[2] == doctest::Approx(40.0).epsilon(1e-14));
  CHECK(polys.f[3] == doctest::Approx(160.0).epsilon(1e-14));
}

TEST_CASE("uw_reduced_polynomials: a0 < 0 whenever the opposite migration is on") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    Parameters p = oracles::random_params(Scenario::M2NoInfectedMigration, rng);
    if (p.m21 <= 0.0) p.m21 = 1.0;
    CHECK(uw_reduced_polynomials(p, UwPoint::U).g[2] < 0.0);
    if (p.m12 <= 0.0) p.m12 = 1.0;
    CHECK(uw_reduced_polynomials(p, UwPoint::W).g[2] < 0.0);
  }
}

TEST_CASE("solve_u finds both M2_U roots and cross-checks them") {
  const auto& p = fixture("M2_U").params;
  const auto result = solve_u(p);
  REQUIRE(result.equilibria.size() == 2);
  CHECK(result.cross_check_ok);
  CHECK(result.worst_mismatch < 1e-6);
  for (const auto& eq : result.equilibria) {
    CHECK(eq.kind == EquilibriumKind::U);
    CHECK(eq.state.s1 == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(eq.state.i2 == 0.0);
    CHECK(eq.state.i1 ==
          doctest::Approx(4.0 + 0.5 * eq.state.s2).epsilon(1e-9));
    CHECK(eq.residual_norm < 1e-8);
  }
  // Frozen root locations from the reduced cubic 0.25 s^3 - 5.5 s^2 - 60 s + 720.
  CHECK(result.equilibria[0].state.s2 == doctest::Approx(8.16013848828993).epsilon(1e-10));
  CHECK(result.equilibria[1].state.s2 == doctest::Approx(26.940435950783).epsilon(1e-10));
}

TEST_CASE("solve_u edge cases") {
  Parameters p = fixture("M2_U").params;
  p.m12 = 0.0;
  p.m21 = 0.0;
  CHECK(solve_u(p).equilibria.empty());

  // The fixtures target distinct equilibria: U does not exist under M2_W.
  CHECK(solve_u(fixture("M2_W").params).equilibria.empty());

  p = fixture("M2_U").params;
  p.gamma1 = 0.0;
  CHECK_THROWS_AS(solve_u(p), std::domain_error);
  CHECK_THROWS_AS(solve_u(fixture("M1_X1").params), std::domain_error);
}

TEST_CASE("solve_w finds the M2_W point") {
  const auto& p = fixture("M2_W").params;
  const auto result = solve_w(p);
  REQUIRE(result.equilibria.size() == 1);
  CHECK(result.cross_check_ok);
  const auto& eq = result.equilibria[0];
  CHECK(eq.kind == EquilibriumKind::W);
  CHECK(eq.state.i1 == 0.0);
  CHECK(eq.state.s2 == doctest::Approx(3.15).epsilon(1e-12));
  CHECK(eq.state.s1 == doctest::Approx(2.32419663725879).epsilon(1e-9));
  CHECK(eq.residual_norm < 1e-8);
}

TEST_CASE("solve_w edge cases") {
  Parameters p = fixture("M2_W").params;
  p.gamma2 = 0.0;
  CHECK_THROWS_AS(solve_w(p), std::domain_error);

  p = fixture("M2_W").params;
  p.m12 = 0.0;
  p.m21 = 0.0;
  CHECK(solve_w(p).equilibria.empty());

  CHECK(solve_w(fixture("M2_U").params).equilibria.empty());
}

TEST_CASE("newton_refine converges to X2 from a nearby guess with i1 pinned to 0") {
  const auto nr = newton_refine({50, 0.1, 8, 20}, fixture("M1_X2").params,
                                ComponentMask{false, true, false, false});
  REQUIRE(nr.status == NewtonStatus::Converged);
  CHECK(nr.eq.state.i1 == 0.0);  // the mask holds the boundary zero
  CHECK(nr.eq.state.s1 == doctest::Approx(55.0).epsilon(1e-9));
  CHECK(nr.eq.state.s2 == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(nr.eq.state.i2 == doctest::Approx(21.0).epsilon(1e-9));
  CHECK(nr.eq.residual_norm < 1e-10);
}

TEST_CASE("newton_refine returns an exact equilibrium unchanged") {
  const auto nr = newton_refine({0, 0, 3, 3}, fixture("M1_X1").params);
  REQUIRE(nr.status == NewtonStatus::Converged);
  CHECK(nr.iterations <= 1);
  CHECK(max_norm_diff(nr.eq.state, {0, 0, 3, 3}) == 0.0);
}

TEST_CASE("newton_refine never silently returns a bad answer") {
  const auto nr = newton_refine({1e6, 1e6, 1e6, 1e6}, fixture("M1_X1").params);
  if (nr.status == NewtonStatus::Converged) {
    CHECK(max_norm(rhs(nr.eq.state, fixture("M1_X1").params)) < 1e-8);
  } else {
    CHECK(nr.status != NewtonStatus::Converged);
  }
  CHECK_THROWS_AS(
      newton_refine({std::nan(""), 0, 0, 0}, fixture("M1_X1").params),
      std::invalid_argument);
}

TEST_CASE("enumerate_equilibria on M1_COEX finds origin, X1 and the interior point") {
  const auto catalog = enumerate_equilibria(fixture("M1_COEX").params);
  CHECK(find_kind(catalog, EquilibriumKind::Origin) != nullptr);
  const auto* x1 = find_kind(catalog, EquilibriumKind::X1);
  REQUIRE(x1 != nullptr);
  CHECK(max_norm_diff(x1->state, {0, 0, 4, 2}) < 1e-9);
  const auto* coex = find_kind(catalog, EquilibriumKind::CoexM1);
  REQUIRE(coex != nullptr);
  CHECK(coex->state.s1 > 0.0);
  CHECK(coex->state.i1 > 0.0);
  CHECK(coex->state.s2 > 0.0);
  CHECK(coex->state.i2 > 0.0);
  // Frozen from the multi-start search, verified by the rhs oracle.
  CHECK(max_norm_diff(coex->state,
                      {4.10802424097237, 3.36045558700793, 3.92226475065496,
                       2.3349167023097}) < 1e-8);
}

TEST_CASE("enumerate_equilibria on M2_COEX finds an interior point") {
  const auto catalog = enumerate_equilibria(fixture("M2_COEX").params);
  const auto* coex = find_kind(catalog, EquilibriumKind::CoexM2);
  REQUIRE(coex != nullptr);
  CHECK(max_norm_diff(coex->state,
                      {4.0, 1.98719399385495, 1.5, 1.5256120122901}) < 1e-8);
}

TEST_CASE("enumerate_equilibria on M1_X1 contains X1 and X2") {
  const auto catalog = enumerate_equilibria(fixture("M1_X1").params);
  const auto* x1 = find_kind(catalog, EquilibriumKind::X1);
  REQUIRE(x1 != nullptr);
  CHECK(max_norm_diff(x1->state, {0, 0, 3, 3}) < 1e-9);
  const auto* x2 = find_kind(catalog, EquilibriumKind::X2);
  REQUIRE(x2 != nullptr);
  CHECK(max_norm_diff(x2->state, {1.5, 0, 3, 6}) < 1e-9);
}

TEST_CASE("enumerate_equilibria invariants: residuals, dedup, seed independence") {
  for (const auto& f : fixtures()) {
    const auto catalog = enumerate_equilibria(f.params, {}, 200, 1);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      CHECK(max_norm(rhs(catalog[i].state, f.params)) < 1e-8);
      for (int k = 0; k < 4; ++k) CHECK(catalog[i].state[k] >= 0.0);
      for (std::size_t j = i + 1; j < catalog.size(); ++j)
        CHECK(max_norm_diff(catalog[i].state, catalog[j].state) >= 1e-6);
    }
    const auto other_seed = enumerate_equilibria(f.params, {}, 200, 2);
    REQUIRE(other_seed.size() == catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
      CHECK(max_norm_diff(catalog[i].state, other_seed[i].state) < 1e-6);
  }
}

TEST_CASE("catalog_ids repeat suffixing") {
  const auto catalog = enumerate_equilibria(fixture("M2_U").params);
  const auto ids = catalog_ids(catalog);
  int u_count = 0;
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    if (catalog[k].kind == EquilibriumKind::U) {
      ++u_count;
      CHECK(ids[k] == (u_count == 1 ? "U" : "U#" + std::to_string(u_count)));
    }
  }
  CHECK(u_count == 2);
}
