#ifndef PATCHSIS_IO_HPP
#define PATCHSIS_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "patchsis/dynamics.hpp"
#include "patchsis/equilibria.hpp"
#include "patchsis/model.hpp"
#include "patchsis/stability.hpp"

namespace patchsis {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  std::string axis;
  std::vector<double> values;
};

struct ScanSpec {
  std::string axis;
  double lo = 0.0, hi = 0.0;
  int n = 0;
};

struct RunConfig {
  Parameters params;
  std::optional<std::string> fixture_name;
  std::optional<State> initial;
  IntegrationSettings integration;
  std::optional<BasinSpec> grid;
  std::optional<SweepSpec> sweep;
  std::optional<ScanSpec> scan;
};

/// Parses and fully validates a JSON run configuration. Unknown keys are
/// rejected; missing required keys and semantic violations are reported
/// with their key path; a {"fixture": ...} reference loads a built-in
/// parameter set, with any explicit params applied on top.
RunConfig parse_config(const std::string& text);

/// Inverse of parse_config up to field equality: parse(emit(c)) == c.
std::string emit_config(const RunConfig& config);

/// CSV with header t,S1,I1,S2,I2, one row per accepted step at 17
/// significant digits, and a trailing "# verdict=..." comment line.
std::string emit_trajectory_csv(const Trajectory& traj);

/// Parses emit_trajectory_csv output (states round-trip bit-exactly).
Trajectory parse_trajectory_csv(const std::string& text);

/// Equilibrium listing without spectra (kind, state, residual, provenance).
std::string emit_equilibria_report(const std::vector<Equilibrium>& catalog,
                                   const Parameters& p);

/// Full JSON report: per equilibrium the kind, state, residual, sorted
/// eigenvalue pairs, class and the named closed-form checks. Keys sorted,
/// output byte-identical across runs.
std::string emit_report(const std::vector<Equilibrium>& catalog,
                        const std::vector<StabilityVerdict>& verdicts,
                        const Parameters& p);

/// Command-line entry point (args exclude the program name).
/// Exit codes: 0 success, 1 usage/config error, 2 computational failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace patchsis

#endif
