#ifndef PATCHSIS_MODEL_HPP
#define PATCHSIS_MODEL_HPP

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchsis/linalg.hpp"

namespace patchsis {

/// The two model variants: M1 keeps a single open migration route
/// (patch 1 -> patch 2, susceptibles and infected); M2 lets susceptibles
/// move both ways but grounds the infected entirely.
enum class Scenario { M1Unidirectional, M2NoInfectedMigration };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(std::string_view text);  // "M1" or "M2"

/// The 14 model constants plus the scenario tag. Single source of truth
/// for a run; validate_params() checks every invariant once up front.
struct Parameters {
  double r1 = 0.0, r2 = 0.0;          // net reproduction rates
  double gamma1 = 0.0, gamma2 = 0.0;  // disease contact rates
  double delta1 = 0.0, delta2 = 0.0;  // recovery rates
  double mu1 = 0.0, mu2 = 0.0;        // infected mortality rates
  double m12 = 0.0, m21 = 0.0;        // susceptible migration rates
  double n12 = 0.0, n21 = 0.0;        // infected migration rates
  double A = 1.0;                     // susceptible half-saturation constant
  double B = 1.0;                     // infected half-saturation constant
  Scenario scenario = Scenario::M1Unidirectional;
};

/// Population state in the fixed component order (S1, I1, S2, I2).
struct State {
  double s1 = 0.0, i1 = 0.0, s2 = 0.0, i2 = 0.0;

  double operator[](int k) const;
  double& operator[](int k);
  std::array<double, 4> array() const { return {s1, i1, s2, i2}; }
  static State of(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
};

double max_norm(const State& x);
double max_norm_diff(const State& a, const State& b);

/// Canonical component names in order: "s1", "i1", "s2", "i2".
std::span<const std::string_view> component_names();
int component_index(std::string_view name);  // throws std::invalid_argument

/// Canonical parameter names: r1, r2, gamma1, gamma2, delta1, delta2,
/// mu1, mu2, m12, m21, n12, n21, A, B.
std::span<const std::string_view> parameter_names();
double get_parameter(const Parameters& p, std::string_view name);
void set_parameter(Parameters& p, std::string_view name, double value);

/// Returns p unchanged when every invariant holds; otherwise throws
/// std::invalid_argument naming the offending field. Scenario-specific
/// notes (e.g. B being inert under M2) are appended to `warnings`.
Parameters validate_params(const Parameters& p,
                           std::vector<std::string>* warnings = nullptr);

/// Time derivative (dS1, dI1, dS2, dI2) of the scenario's four equations.
State rhs(const State& x, const Parameters& p);

/// Analytic Jacobian of rhs at x, rows/columns in component order.
Mat4 jacobian(const State& x, const Parameters& p);

/// r1*S1 + r2*S2 - mu1*I1 - mu2*I2. Migration terms cancel pairwise, so
/// this equals the sum of all four rhs components identically.
double total_net_growth(const State& x, const Parameters& p);

/// Stable short hash of the parameter values + scenario, used to tie
/// equilibria, trajectories and basin maps back to their generating run.
std::string params_digest(const Parameters& p);

/// A named parameter set from the published stable-scenario lists.
/// `note` records how any garbled entry in the printed list was resolved.
struct Fixture {
  std::string name;
  Parameters params;
  std::string expected_kind;
  State regression_initial;
  std::string note;
};

const std::vector<Fixture>& fixtures();
const Fixture& fixture(std::string_view name);  // throws std::invalid_argument

}  // namespace patchsis

#endif
