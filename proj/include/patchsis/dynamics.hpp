#ifndef PATCHSIS_DYNAMICS_HPP
#define PATCHSIS_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "patchsis/equilibria.hpp"
#include "patchsis/model.hpp"
#include "patchsis/stability.hpp"

namespace patchsis {

struct IntegrationSettings {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_max = 1e4;
  std::int64_t max_steps = 2'000'000;
  double initial_step = 1e-3;
};

enum class TrajectoryVerdict { Converged, TimedOut, BlewUp };
std::string to_string(TrajectoryVerdict verdict);

/// Accepted integration steps, including the initial state as row 0.
/// equilibrium_id stays empty until a labeling pipeline attaches one.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  TrajectoryVerdict verdict = TrajectoryVerdict::TimedOut;
  double final_residual = 0.0;
  std::string equilibrium_id;
};

/// Adaptive Dormand-Prince 5(4) integration to t_max, or earlier when the
/// state change rate and rhs norm both stay below abs_tol for 50
/// consecutive accepted steps. Components in (-1e-12, 0) are snapped to 0;
/// a component below -1e-9, a non-finite state or a step underflow ends
/// the run with BlewUp.
Trajectory integrate(const State& initial, const Parameters& p,
                     const IntegrationSettings& settings = {});

/// Index of the nearest cataloged equilibrium within 1e-5 max-norm of the
/// trajectory's final state; ties break by distance then catalog order.
std::optional<std::size_t> detect_convergence(const Trajectory& traj,
                                              const std::vector<Equilibrium>& catalog);

struct BasinAxis {
  int component = 0;  // index into (s1, i1, s2, i2)
  double lo = 0.0, hi = 1.0;
  int count = 1;
};

struct BasinSpec {
  BasinAxis axis1, axis2;
  State fixed;  // values for the two non-axis components
};

/// Grid of initial conditions labeled by the equilibrium each converges
/// to ("TIMED_OUT" for anything else). Row-major over axis1 then axis2;
/// identical output for any worker count.
struct BasinMap {
  BasinSpec spec;
  std::vector<std::string> labels;
  std::string params_digest;
};

BasinMap basin_grid(const Parameters& p, const BasinSpec& spec,
                    const IntegrationSettings& settings = {}, int workers = 1);

/// One row per (axis value, equilibrium). A value whose parameters fail
/// validation contributes a single row with `error` set.
struct SweepRow {
  double value = 0.0;
  std::string error;
  Equilibrium equilibrium;
  StabilityClass cls = StabilityClass::Marginal;
  double max_real = 0.0;
};

std::vector<SweepRow> parameter_sweep(const Parameters& p, const std::string& axis,
                                      const std::vector<double>& values,
                                      int workers = 1);

struct HopfPoint {
  double value = 0.0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double complex_pair_real_part = 0.0;
};

class BranchLost : public std::runtime_error {
 public:
  BranchLost(const std::string& what, double last_good_value)
      : std::runtime_error(what), last_good(last_good_value) {}
  double last_good;
};

/// Tracks the equilibrium branch seeded by `branch_seed` across n samples
/// of the axis (Newton warm starts from the previous point), records sign
/// changes of the Hopf residual, bisection-refines each to |a2 a1 - a0|
/// < 1e-8 and keeps only crossings where the deflated cubic really has a
/// conjugate pair on the axis with a negative third root.
std::vector<HopfPoint> hopf_scan(const Parameters& p, const std::string& axis,
                                 double lo, double hi, int n,
                                 const Equilibrium& branch_seed);

/// Scanner core shared with tests: sign-change detection plus bisection
/// refinement of r(v) = a2 a1 - a0 over a caller-supplied cubic branch.
using CubicBranch = std::function<std::array<double, 3>(double)>;
std::vector<HopfPoint> scan_cubic_branch(const CubicBranch& branch, double lo,
                                         double hi, int n,
                                         double residual_tol = 1e-8);

}  // namespace patchsis

#endif
