#include "patchsis/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace patchsis {

namespace {

constexpr int kQuietStepsRequired = 50;
constexpr double kMinStep = 1e-14;
constexpr double kNegativeClampTol = 1e-12;
constexpr double kNegativeBlowupTol = 1e-9;
constexpr double kMatchTol = 1e-5;

State axpy(const State& y, double h, const State& d) {
  return {y.s1 + h * d.s1, y.i1 + h * d.i1, y.s2 + h * d.s2, y.i2 + h * d.i2};
}

// Runs fn(0..count-1) on `workers` threads with a static stride partition;
// any slot writes land at their own index, so results are merge-by-index
// deterministic. The first worker exception is rethrown.
void parallel_for_indexed(std::size_t count, int workers,
                          const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int n_threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < count;
             i += static_cast<std::size_t>(n_threads))
          fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double axis_value(const BasinAxis& axis, int k) {
  if (axis.count <= 1) return axis.lo;
  return axis.lo + (axis.hi - axis.lo) * k / (axis.count - 1);
}

struct ScanCallbacks {
  std::function<double(double)> residual;
  // Returns the pair real part when the point verifies as a Hopf candidate.
  std::function<std::optional<double>(double)> verify;
};

std::vector<HopfPoint> scan_core(const ScanCallbacks& cb, double lo, double hi,
                                 int n, double residual_tol) {
  if (n < 2) throw std::invalid_argument("hopf scan needs at least 2 samples");
  std::vector<double> values(static_cast<std::size_t>(n));
  std::vector<double> res(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    values[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    res[static_cast<std::size_t>(k)] = cb.residual(values[static_cast<std::size_t>(k)]);
  }

  std::vector<HopfPoint> out;
  for (int k = 0; k + 1 < n; ++k) {
    const double ra = res[static_cast<std::size_t>(k)];
    const double rb = res[static_cast<std::size_t>(k + 1)];
    double refined;
    if (std::abs(ra) < residual_tol) {
      if (k > 0 && std::abs(res[static_cast<std::size_t>(k - 1)]) < residual_tol)
        continue;  // already reported from the previous bracket
      refined = values[static_cast<std::size_t>(k)];
    } else if ((ra < 0.0) != (rb < 0.0)) {
      double a = values[static_cast<std::size_t>(k)];
      double b = values[static_cast<std::size_t>(k + 1)];
      double fa = ra;
      refined = 0.5 * (a + b);
      for (int it = 0; it < 200; ++it) {
        refined = 0.5 * (a + b);
        const double fm = cb.residual(refined);
        if (std::abs(fm) < residual_tol) break;
        if ((fa < 0.0) == (fm < 0.0)) {
          a = refined;
          fa = fm;
        } else {
          b = refined;
        }
        if (std::abs(b - a) < 1e-15 * (1.0 + std::abs(refined))) break;
      }
    } else {
      continue;
    }
    if (const auto pair_re = cb.verify(refined)) {
      HopfPoint point;
      point.value = refined;
      point.residual_before = ra;
      point.residual_after = rb;
      point.complex_pair_real_part = *pair_re;
      out.push_back(point);
    }
  }
  // Trailing sample sitting exactly on a crossing.
  if (n >= 2 && std::abs(res[static_cast<std::size_t>(n - 1)]) < residual_tol &&
      std::abs(res[static_cast<std::size_t>(n - 2)]) >= residual_tol) {
    if (const auto pair_re = cb.verify(values[static_cast<std::size_t>(n - 1)])) {
      out.push_back({values[static_cast<std::size_t>(n - 1)],
                     res[static_cast<std::size_t>(n - 2)],
                     res[static_cast<std::size_t>(n - 1)], *pair_re});
    }
  }
  return out;
}

}  // namespace

std::string to_string(TrajectoryVerdict verdict) {
  switch (verdict) {
    case TrajectoryVerdict::Converged: return "CONVERGED";
    case TrajectoryVerdict::TimedOut: return "TIMED_OUT";
    case TrajectoryVerdict::BlewUp: return "BLEW_UP";
  }
  return "TIMED_OUT";
}

Trajectory integrate(const State& initial, const Parameters& p,
                     const IntegrationSettings& settings) {
  for (int k = 0; k < 4; ++k) {
    if (!std::isfinite(initial[k]))
      throw std::invalid_argument("initial state must be finite");
    if (initial[k] < 0.0)
      throw std::invalid_argument("initial state must be nonnegative");
  }
  if (!(settings.rel_tol > 0.0) || !(settings.abs_tol > 0.0) ||
      !(settings.t_max > 0.0) || !(settings.initial_step > 0.0))
    throw std::invalid_argument("integration settings must be positive");

  // Dormand-Prince 5(4) coefficients.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Trajectory traj;
  State y = initial;
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(y);

  const double max_h = settings.t_max / 200.0;
  double h = std::min(settings.initial_step, max_h);
  int quiet = 0;
  std::int64_t attempts = 0;
  bool done = false;

  while (!done && t < settings.t_max * (1.0 - 1e-15)) {
    if (++attempts > settings.max_steps) {
      traj.verdict = TrajectoryVerdict::TimedOut;
      done = true;
      break;
    }
    h = std::min({h, max_h, settings.t_max - t});
    if (h < kMinStep) {
      traj.verdict = TrajectoryVerdict::BlewUp;
      done = true;
      break;
    }

    const State k1 = rhs(y, p);
    const State k2 = rhs(axpy(y, h * a21, k1), p);
    State ys;
    for (int k = 0; k < 4; ++k) ys[k] = y[k] + h * (a31 * k1[k] + a32 * k2[k]);
    const State k3 = rhs(ys, p);
    for (int k = 0; k < 4; ++k)
      ys[k] = y[k] + h * (a41 * k1[k] + a42 * k2[k] + a43 * k3[k]);
    const State k4 = rhs(ys, p);
    for (int k = 0; k < 4; ++k)
      ys[k] = y[k] + h * (a51 * k1[k] + a52 * k2[k] + a53 * k3[k] + a54 * k4[k]);
    const State k5 = rhs(ys, p);
    for (int k = 0; k < 4; ++k)
      ys[k] = y[k] + h * (a61 * k1[k] + a62 * k2[k] + a63 * k3[k] + a64 * k4[k] +
                          a65 * k5[k]);
    const State k6 = rhs(ys, p);

    State y_new;
    for (int k = 0; k < 4; ++k)
      y_new[k] = y[k] + h * (b1 * k1[k] + b3 * k3[k] + b4 * k4[k] + b5 * k5[k] +
                             b6 * k6[k]);
    const State k7 = rhs(y_new, p);

    double err_norm = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double err = h * (e1 * k1[k] + e3 * k3[k] + e4 * k4[k] + e5 * k5[k] +
                              e6 * k6[k] + e7 * k7[k]);
      const double scale = settings.abs_tol +
                           settings.rel_tol * std::max(std::abs(y[k]), std::abs(y_new[k]));
      err_norm = std::max(err_norm, std::abs(err) / scale);
    }

    if (!std::isfinite(err_norm)) {
      h *= 0.25;
      continue;
    }

    if (err_norm <= 1.0) {
      const State y_prev = y;
      y = y_new;
      t += h;
      bool blown = false;
      for (int k = 0; k < 4; ++k) {
        if (!std::isfinite(y[k]) || y[k] < -kNegativeBlowupTol) blown = true;
        else if (y[k] > -kNegativeClampTol && y[k] < 0.0) y[k] = 0.0;
      }
      traj.times.push_back(t);
      traj.states.push_back(y);
      if (blown) {
        traj.verdict = TrajectoryVerdict::BlewUp;
        done = true;
        break;
      }
      const State f = rhs(y, p);
      double rhs_norm = 0.0, change_rate = 0.0;
      for (int k = 0; k < 4; ++k) {
        rhs_norm = std::max(rhs_norm, std::abs(f[k]));
        change_rate = std::max(change_rate, std::abs(y[k] - y_prev[k]) / h);
      }
      if (rhs_norm < settings.abs_tol && change_rate < settings.abs_tol) {
        if (++quiet >= kQuietStepsRequired) {
          traj.verdict = TrajectoryVerdict::Converged;
          done = true;
          break;
        }
      } else {
        quiet = 0;
      }
    }

    const double factor = 0.9 * std::pow(std::max(err_norm, 1e-10), -0.2);
    h *= std::clamp(factor, 0.2, 5.0);
  }

  if (!done) traj.verdict = TrajectoryVerdict::TimedOut;
  const State f_final = rhs(traj.states.back(), p);
  traj.final_residual = max_norm(f_final);
  return traj;
}

std::optional<std::size_t> detect_convergence(const Trajectory& traj,
                                              const std::vector<Equilibrium>& catalog) {
  if (traj.states.empty() || catalog.empty()) return std::nullopt;
  const State& final_state = traj.states.back();
  std::optional<std::size_t> best;
  double best_dist = kMatchTol;
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const double d = max_norm_diff(final_state, catalog[k].state);
    if (d < best_dist) {
      best = k;
      best_dist = d;
    }
  }
  return best;
}

BasinMap basin_grid(const Parameters& p, const BasinSpec& spec,
                    const IntegrationSettings& settings, int workers) {
  validate_params(p);
  if (spec.axis1.component == spec.axis2.component)
    throw std::invalid_argument("basin axes must use distinct components");
  if (spec.axis1.count < 1 || spec.axis2.count < 1)
    throw std::invalid_argument("basin axis counts must be >= 1");

  const auto catalog = enumerate_equilibria(p);
  const auto ids = catalog_ids(catalog);

  BasinMap map;
  map.spec = spec;
  map.params_digest = params_digest(p);
  const std::size_t n1 = static_cast<std::size_t>(spec.axis1.count);
  const std::size_t n2 = static_cast<std::size_t>(spec.axis2.count);
  map.labels.assign(n1 * n2, "TIMED_OUT");

  parallel_for_indexed(n1 * n2, workers, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / n2);
    const int j = static_cast<int>(idx % n2);
    State initial = spec.fixed;
    initial[spec.axis1.component] = axis_value(spec.axis1, i);
    initial[spec.axis2.component] = axis_value(spec.axis2, j);
    const Trajectory traj = integrate(initial, p, settings);
    if (traj.verdict == TrajectoryVerdict::Converged) {
      if (const auto hit = detect_convergence(traj, catalog))
        map.labels[idx] = ids[*hit];
    } else if (traj.verdict == TrajectoryVerdict::BlewUp) {
      map.labels[idx] = "BLEW_UP";
    }
  });
  return map;
}

std::vector<SweepRow> parameter_sweep(const Parameters& p, const std::string& axis,
                                      const std::vector<double>& values,
                                      int workers) {
  get_parameter(p, axis);  // reject unknown axis names up front
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("sweep values must be finite");

  std::vector<std::vector<SweepRow>> per_value(values.size());
  parallel_for_indexed(values.size(), workers, [&](std::size_t idx) {
    Parameters pv = p;
    set_parameter(pv, axis, values[idx]);
    SweepRow base;
    base.value = values[idx];
    try {
      validate_params(pv);
    } catch (const std::invalid_argument& e) {
      base.error = e.what();
      per_value[idx].push_back(base);
      return;
    }
    const auto catalog = enumerate_equilibria(pv);
    for (const auto& eq : catalog) {
      SweepRow row = base;
      row.equilibrium = eq;
      const auto verdict = classify(eq, pv);
      row.cls = verdict.cls;
      row.max_real = verdict.spectrum.max_real;
      per_value[idx].push_back(row);
    }
  });

  std::vector<SweepRow> rows;
  for (auto& group : per_value)
    for (auto& row : group) rows.push_back(std::move(row));
  return rows;
}

std::vector<HopfPoint> scan_cubic_branch(const CubicBranch& branch, double lo,
                                         double hi, int n, double residual_tol) {
  ScanCallbacks cb;
  cb.residual = [&branch](double v) {
    const auto c = branch(v);
    return c[0] * c[1] - c[2];
  };
  cb.verify = [&branch](double v) -> std::optional<double> {
    const auto pair = cubic_complex_pair(branch(v));
    if (!pair) return std::nullopt;
    if (std::abs(pair->pair_real_part) >= 1e-6 || pair->third_root >= 0.0)
      return std::nullopt;
    return pair->pair_real_part;
  };
  return scan_core(cb, lo, hi, n, residual_tol);
}

std::vector<HopfPoint> hopf_scan(const Parameters& p, const std::string& axis,
                                 double lo, double hi, int n,
                                 const Equilibrium& branch_seed) {
  get_parameter(p, axis);

  // Boundary zeros of the seed stay pinned along the branch.
  ComponentMask mask{};
  for (int k = 0; k < 4; ++k)
    mask[static_cast<std::size_t>(k)] = std::abs(branch_seed.state[k]) < 1e-9;

  State current = branch_seed.state;
  double last_good = std::numeric_limits<double>::quiet_NaN();

  auto track = [&, mask](double v) -> std::pair<Equilibrium, Parameters> {
    Parameters pv = p;
    set_parameter(pv, axis, v);
    try {
      validate_params(pv);
    } catch (const std::invalid_argument& e) {
      throw BranchLost(std::string("invalid parameters at axis value ") +
                           std::to_string(v) + ": " + e.what(),
                       last_good);
    }
    const auto nr = newton_refine(current, pv, mask);
    if (nr.status != NewtonStatus::Converged)
      throw BranchLost("branch continuation failed at axis value " +
                           std::to_string(v),
                       last_good);
    for (int k = 0; k < 4; ++k)
      if (nr.eq.state[k] < -kNegativeBlowupTol)
        throw BranchLost("branch left the feasible region at axis value " +
                             std::to_string(v),
                         last_good);
    if (max_norm_diff(nr.eq.state, current) > 0.5 * (1.0 + max_norm(current)))
      throw BranchLost("branch jumped to a different equilibrium at axis value " +
                           std::to_string(v),
                       last_good);
    current = nr.eq.state;
    last_good = v;
    return {nr.eq, pv};
  };

  ScanCallbacks cb;
  cb.residual = [&](double v) {
    const auto [eq, pv] = track(v);
    return hopf_residual(eq, pv);
  };
  cb.verify = [&](double v) -> std::optional<double> {
    const auto [eq, pv] = track(v);
    const Mat4 jac = jacobian(eq.state, pv);
    if (const auto row = find_deflatable_row(jac)) {
      const auto factor = extract_cubic_factor(jac, *row);
      const auto pair = cubic_complex_pair(factor.cubic);
      if (!pair) return std::nullopt;
      if (std::abs(pair->pair_real_part) >= 1e-6 || pair->third_root >= 0.0)
        return std::nullopt;
      return pair->pair_real_part;
    }
    // No deflation: fall back to the full spectrum.
    const auto spectrum = eigenvalues_4x4(jac);
    for (int k = 0; k < 3; ++k) {
      const auto& e1c = spectrum.eigenvalues[static_cast<std::size_t>(k)];
      const auto& e2c = spectrum.eigenvalues[static_cast<std::size_t>(k + 1)];
      if (e1c.imag() > 1e-9 && std::abs(e1c.real() - e2c.real()) < 1e-9 &&
          std::abs(e1c.real()) < 1e-6)
        return e1c.real();
    }
    return std::nullopt;
  };
  return scan_core(cb, lo, hi, n, 1e-8);
}

}  // namespace patchsis
