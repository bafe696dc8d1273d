#include <cmath>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "patchsis/model.hpp"

using namespace patchsis;

TEST_CASE("validate_params accepts every fixture") {
  for (const auto& f : fixtures()) CHECK_NOTHROW(validate_params(f.params));
}

TEST_CASE("validate_params rejects bad inputs with the field named") {
  Parameters p = fixture("M1_X1").params;

  p.A = 0.0;
  CHECK_THROWS_WITH_AS(validate_params(p), "A must be > 0", std::invalid_argument);

  p = fixture("M1_X1").params;
  p.m12 = 5.0;
  CHECK_THROWS_WITH_AS(validate_params(p), "M1 forbids m12 != 0", std::invalid_argument);

  p = fixture("M1_X1").params;
  p.gamma1 = -0.5;
  CHECK_THROWS_WITH_AS(validate_params(p), "gamma1 must be >= 0", std::invalid_argument);

  p = fixture("M2_U").params;
  p.n21 = 1.0;
  CHECK_THROWS_WITH_AS(validate_params(p), "M2 forbids n21 != 0", std::invalid_argument);

  p = fixture("M1_X1").params;
  p.r1 = std::nan("");
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
}

TEST_CASE("validate_params warns that B is inert under M2") {
  std::vector<std::string> warnings;
  validate_params(fixture("M2_U").params, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("B is ignored under M2") != std::string::npos);

  warnings.clear();
  validate_params(fixture("M1_X1").params, &warnings);
  CHECK(warnings.empty());
}

TEST_CASE("rhs matches hand substitution for M1_X1 at (1,1,1,1)") {
  const auto& p = fixture("M1_X1").params;
  const State d = rhs({1, 1, 1, 1}, p);
  CHECK(d.s1 == doctest::Approx(-4.66667).epsilon(1e-4));
  CHECK(d.i1 == doctest::Approx(-1.16667).epsilon(1e-4));
  CHECK(d.s2 == doctest::Approx(8.66667).epsilon(1e-4));
  CHECK(d.i2 == doctest::Approx(-1.83333).epsilon(1e-4));
  // Exact fractions: (-14/3, -7/6, 26/3, -11/6).
  CHECK(std::abs(d.s1 + 14.0 / 3.0) < 1e-12);
  CHECK(std::abs(d.i1 + 7.0 / 6.0) < 1e-12);
  CHECK(std::abs(d.s2 - 26.0 / 3.0) < 1e-12);
  CHECK(std::abs(d.i2 + 11.0 / 6.0) < 1e-12);
}

TEST_CASE("rhs vanishes at X1 = (0,0,3,3) for M1_X1 and at the origin everywhere") {
  const auto& p = fixture("M1_X1").params;
  CHECK(max_norm(rhs({0, 0, 3, 3}, p)) < 1e-12);
  for (const auto& f : fixtures()) CHECK(max_norm(rhs({0, 0, 0, 0}, f.params)) == 0.0);
}

TEST_CASE("rhs agrees with the per-equation transcription oracle") {
  std::mt19937_64 rng(2024);
  for (const auto& f : fixtures()) {
    for (int trial = 0; trial < 50; ++trial) {
      const State x = oracles::random_state(rng);
      const State got = rhs(x, f.params);
      const State want = oracles::reference_rhs(x, f.params);
      CHECK(max_norm_diff(got, want) < 1e-12 * (1.0 + max_norm(want)));
    }
  }
}

TEST_CASE("jacobian entries at X1 under M1_X1") {
  const auto& p = fixture("M1_X1").params;
  const Mat4 j = jacobian({0, 0, 3, 3}, p);
  CHECK(j(0, 0) == doctest::Approx(-6.0 / 7.0).epsilon(1e-12));  // r1 - m21/(A+6)
  CHECK(j(2, 3) == doctest::Approx(-1.0).epsilon(1e-12));        // -gamma2*3 + delta2
}

TEST_CASE("jacobian matches central finite differences") {
  std::mt19937_64 rng(99);
  for (const auto& f : fixtures()) {
    for (int trial = 0; trial < 100; ++trial) {
      const State x = oracles::random_state(rng);
      const Mat4 got = jacobian(x, f.params);
      const Mat4 want = oracles::fd_jacobian(x, f.params);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const double rel = std::abs(got(i, j) - want(i, j)) /
                             (1.0 + std::abs(got(i, j)));
          CHECK(rel < 1e-6);
        }
    }
  }
}

TEST_CASE("M2 jacobian has exact structural zeros") {
  std::mt19937_64 rng(7);
  for (const char* name : {"M2_U", "M2_W", "M2_COEX"}) {
    const auto& p = fixture(name).params;
    for (int trial = 0; trial < 25; ++trial) {
      const Mat4 j = jacobian(oracles::random_state(rng), p);
      CHECK(j(1, 2) == 0.0);
      CHECK(j(1, 3) == 0.0);
      CHECK(j(3, 0) == 0.0);
      CHECK(j(3, 1) == 0.0);
    }
  }
}

TEST_CASE("total_net_growth values and cancellation identity") {
  const auto& p = fixture("M1_X1").params;
  CHECK(total_net_growth({1, 1, 1, 1}, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(total_net_growth({0, 0, 0, 0}, p) == 0.0);

  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 10000; ++trial) {
    const Scenario scen = trial % 2 == 0 ? Scenario::M1Unidirectional
                                         : Scenario::M2NoInfectedMigration;
    const Parameters pr = oracles::random_params(scen, rng);
    const State x = oracles::random_state(rng);
    const State d = rhs(x, pr);
    const double sum = ((d.s1 + d.i1) + d.s2) + d.i2;
    const double growth = total_net_growth(x, pr);
    CHECK(std::abs(sum - growth) < 1e-12 * (1.0 + std::abs(growth)));
  }
}

TEST_CASE("boundary faces never push the flow negative") {
  // For each face x_k = 0 the k-th derivative is nonnegative, which is what
  // keeps the nonnegative orthant forward-invariant.
  std::mt19937_64 rng(31337);
  for (const auto& f : fixtures()) {
    for (int face = 0; face < 4; ++face) {
      for (int trial = 0; trial < 50; ++trial) {
        State x = oracles::random_state(rng);
        x[face] = 0.0;
        CHECK(rhs(x, f.params)[face] >= 0.0);
      }
    }
  }
}

TEST_CASE("six fixtures with the published values and resolved notes") {
  const auto& all = fixtures();
  REQUIRE(all.size() == 6);
  std::set<std::string> names;
  for (const auto& f : all) names.insert(f.name);
  for (const char* want : {"M1_X1", "M1_X2", "M1_COEX", "M2_U", "M2_W", "M2_COEX"})
    CHECK(names.count(want) == 1);

  CHECK(fixture("M1_X1").params.m21 == 20.0);
  CHECK(fixture("M1_X1").params.r1 == 2.0);
  // Garbled published entries carry their resolution in the note.
  CHECK(fixture("M1_X2").note.find("delta1=1") != std::string::npos);
  CHECK(fixture("M1_X2").params.delta2 == 1.0);
  CHECK(fixture("M1_X2").params.mu2 == 3.0);
  CHECK(fixture("M2_COEX").note.find("mu1 = 2, mu2 = 1") != std::string::npos);
  CHECK(fixture("M2_COEX").params.mu2 == 1.0);
  CHECK(fixture("M2_W").regression_initial.i1 == 0.0);
  CHECK_THROWS_AS(fixture("NOPE"), std::invalid_argument);
}

TEST_CASE("params_digest is stable and separates fixtures") {
  std::set<std::string> digests;
  for (const auto& f : fixtures()) {
    const std::string d = params_digest(f.params);
    CHECK(d.size() == 16);
    CHECK(d == params_digest(f.params));
    digests.insert(d);
  }
  CHECK(digests.size() == 6);
}

TEST_CASE("parameter and component name access") {
  Parameters p = fixture("M1_X1").params;
  CHECK(get_parameter(p, "m21") == 20.0);
  set_parameter(p, "m21", 14.0);
  CHECK(p.m21 == 14.0);
  CHECK_THROWS_AS(get_parameter(p, "bogus"), std::invalid_argument);
  CHECK(component_index("s2") == 2);
  CHECK_THROWS_AS(component_index("x9"), std::invalid_argument);
  CHECK(parameter_names().size() == 14);
}
