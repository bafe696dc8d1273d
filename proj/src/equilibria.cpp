#include "patchsis/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "patchsis/linalg.hpp"

namespace patchsis {

namespace {

constexpr double kResidualTol = 1e-8;
constexpr double kNewtonTol = 1e-10;
constexpr double kDedupTol = 1e-6;
constexpr double kFeasibleTol = 1e-10;

double residual_norm_at(const State& x, const Parameters& p) {
  return max_norm(rhs(x, p));
}

void require_scenario(const Parameters& p, Scenario s, const char* op) {
  if (p.scenario != s)
    throw std::domain_error(std::string(op) + " requires the " +
                            to_string(s) + " scenario");
}

void require_positive(double v, const char* name, const char* op) {
  if (!(v > 0.0))
    throw std::domain_error(std::string(name) + " must be > 0 for " + op);
}

// Radical-inverse (van der Corput) sequence value for a given base.
double radical_inverse(unsigned index, unsigned base) {
  const double inv = 1.0 / base;
  double f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

// Bracketed bisection on a scalar function; the bracket must change sign.
double bisect_root(const std::function<double(double)>& fn, double lo, double hi,
                   double flo) {
  double a = lo, b = hi, fa = flo;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    const double fm = fn(m);
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
    if (b - a < 1e-15 * (1.0 + std::abs(m))) break;
  }
  return 0.5 * (a + b);
}

struct UwSetup {
  UwPoint which;
  double pinned;                               // the fixed susceptible value
  std::function<State(double)> lift;           // free variable -> full state
  std::function<double(double)> scalar;        // the 1-D residual
  ComponentMask polish_mask;
  double scan_hi;
};

UwSetup uw_setup(const Parameters& p, UwPoint which) {
  UwSetup s;
  s.which = which;
  if (which == UwPoint::U) {
    const double s1 = (p.delta1 + p.mu1) / p.gamma1;
    s.pinned = s1;
    s.lift = [s1, &p](double s2) {
      return State{s1, (p.r1 * s1 + p.r2 * s2) / p.mu1, s2, 0.0};
    };
    s.scalar = [lift = s.lift, &p](double s2) { return rhs(lift(s2), p).s2; };
    s.polish_mask = {false, false, false, true};  // hold i2 = 0
    double alt = (p.gamma2 > 0.0 && p.mu2 > 0.0) ? (p.delta2 + p.mu2) / p.gamma2 : 0.0;
    s.scan_hi = 10.0 * std::max({p.A, p.m12 + p.m21, s1, alt, 1.0});
  } else {
    const double s2 = (p.delta2 + p.mu2) / p.gamma2;
    s.pinned = s2;
    s.lift = [s2, &p](double s1) {
      return State{s1, 0.0, s2, (p.r2 * s2 + p.r1 * s1) / p.mu2};
    };
    s.scalar = [lift = s.lift, &p](double s1) { return rhs(lift(s1), p).s1; };
    s.polish_mask = {false, true, false, false};  // hold i1 = 0
    double alt = (p.gamma1 > 0.0 && p.mu1 > 0.0) ? (p.delta1 + p.mu1) / p.gamma1 : 0.0;
    s.scan_hi = 10.0 * std::max({p.A, p.m12 + p.m21, s2, alt, 1.0});
  }
  return s;
}

UwSolveResult solve_uw(const Parameters& p, UwPoint which) {
  require_scenario(p, Scenario::M2NoInfectedMigration,
                   which == UwPoint::U ? "solve_u" : "solve_w");
  if (which == UwPoint::U) {
    require_positive(p.gamma1, "gamma1", "solve_u");
    require_positive(p.mu1, "mu1", "solve_u");
  } else {
    require_positive(p.gamma2, "gamma2", "solve_w");
    require_positive(p.mu2, "mu2", "solve_w");
  }

  const UwSetup setup = uw_setup(p, which);
  const auto polys = uw_reduced_polynomials(p, which);

  UwSolveResult result;
  const int panels = 1024;
  const double h = setup.scan_hi / panels;
  double prev_v = setup.scalar(0.0);
  for (int k = 1; k <= panels; ++k) {
    const double x0 = (k - 1) * h, x1 = k * h;
    const double cur_v = setup.scalar(x1);
    double root = std::numeric_limits<double>::quiet_NaN();
    if (prev_v == 0.0) {
      if (x0 > 0.0) root = x0;
    } else if (std::isfinite(prev_v) && std::isfinite(cur_v) && cur_v != 0.0 &&
               (prev_v < 0.0) != (cur_v < 0.0)) {
      root = bisect_root(setup.scalar, x0, x1, prev_v);
    }
    prev_v = cur_v;
    if (!std::isfinite(root) || root <= 0.0) continue;

    State x = setup.lift(root);
    double res = residual_norm_at(x, p);
    if (res >= kResidualTol) {
      const auto nr = newton_refine(x, p, setup.polish_mask);
      if (nr.status != NewtonStatus::Converged) continue;
      x = nr.eq.state;
      res = nr.eq.residual_norm;
      if (res >= kResidualTol) continue;
    }
    if (x.s1 < -kFeasibleTol || x.i1 < -kFeasibleTol || x.s2 < -kFeasibleTol ||
        x.i2 < -kFeasibleTol)
      continue;

    // Cross-check against the reduced intersection polynomials.
    const double free_var = which == UwPoint::U ? x.s2 : x.s1;
    const double fg = ((polys.f[0] * free_var + polys.f[1]) * free_var + polys.f[2]) *
                          free_var + polys.f[3];
    const double gg = (polys.g[0] * free_var + polys.g[1]) * free_var + polys.g[2];
    const double mismatch = std::abs(fg - gg) / (1.0 + std::abs(fg));
    result.worst_mismatch = std::max(result.worst_mismatch, mismatch);
    if (mismatch > 1e-6) result.cross_check_ok = false;

    Equilibrium eq;
    eq.kind = which == UwPoint::U ? EquilibriumKind::U : EquilibriumKind::W;
    eq.state = x;
    eq.residual_norm = res;
    eq.provenance = Provenance::ReducedRoot;
    eq.params_digest = params_digest(p);
    result.equilibria.push_back(eq);
  }
  return result;
}

}  // namespace

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Origin: return "ORIGIN";
    case EquilibriumKind::X1: return "X1";
    case EquilibriumKind::X2: return "X2";
    case EquilibriumKind::CoexM1: return "COEX_M1";
    case EquilibriumKind::U: return "U";
    case EquilibriumKind::W: return "W";
    case EquilibriumKind::CoexM2: return "COEX_M2";
    case EquilibriumKind::Other: return "OTHER";
  }
  return "OTHER";
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::ClosedForm: return "CLOSED_FORM";
    case Provenance::ReducedRoot: return "REDUCED_ROOT";
    case Provenance::Newton: return "NEWTON";
  }
  return "NEWTON";
}

std::string to_string(CoexBranch branch) {
  switch (branch) {
    case CoexBranch::Coex1: return "COEX_1";
    case CoexBranch::Coex1Bis: return "COEX_1BIS";
    case CoexBranch::None: return "NONE";
    case CoexBranch::UndefinedZ: return "UNDEFINED_Z";
  }
  return "NONE";
}

EquilibriumKind classify_kind(const State& x, Scenario scenario, double zero_tol) {
  const bool z1 = std::abs(x.s1) < zero_tol;
  const bool z2 = std::abs(x.i1) < zero_tol;
  const bool z3 = std::abs(x.s2) < zero_tol;
  const bool z4 = std::abs(x.i2) < zero_tol;
  if (z1 && z2 && z3 && z4) return EquilibriumKind::Origin;
  if (scenario == Scenario::M1Unidirectional) {
    if (z1 && z2 && !z3 && !z4) return EquilibriumKind::X1;
    if (!z1 && z2 && !z3 && !z4) return EquilibriumKind::X2;
    if (!z1 && !z2 && !z3 && !z4) return EquilibriumKind::CoexM1;
    return EquilibriumKind::Other;
  }
  if (!z1 && !z2 && !z3 && z4) return EquilibriumKind::U;
  if (!z1 && z2 && !z3 && !z4) return EquilibriumKind::W;
  if (!z1 && !z2 && !z3 && !z4) return EquilibriumKind::CoexM2;
  return EquilibriumKind::Other;
}

Equilibrium origin_equilibrium(const Parameters& p) {
  return {EquilibriumKind::Origin, State{}, 0.0, Provenance::ClosedForm,
          params_digest(p)};
}

Equilibrium x1_closed_form(const Parameters& p) {
  require_scenario(p, Scenario::M1Unidirectional, "x1_closed_form");
  require_positive(p.gamma2, "gamma2", "the X1 closed form");
  require_positive(p.mu2, "mu2", "the X1 closed form");
  State x;
  x.s2 = (p.delta2 + p.mu2) / p.gamma2;
  x.i2 = p.r2 * (p.delta2 + p.mu2) / (p.gamma2 * p.mu2);
  const double res = residual_norm_at(x, p);
  if (res >= kResidualTol)
    throw std::runtime_error("X1 closed form failed its residual check");
  return {EquilibriumKind::X1, x, res, Provenance::ClosedForm, params_digest(p)};
}

X2ClosedForm x2_closed_form(const Parameters& p) {
  require_scenario(p, Scenario::M1Unidirectional, "x2_closed_form");
  require_positive(p.r1, "r1", "the X2 closed form");
  require_positive(p.gamma2, "gamma2", "the X2 closed form");
  require_positive(p.mu2, "mu2", "the X2 closed form");

  const double excess = p.gamma2 * p.m21 - p.r1 * p.gamma2 * p.A -
                        (p.delta2 + p.mu2) * p.r1;
  State x;
  x.s2 = (p.delta2 + p.mu2) / p.gamma2;
  x.i2 = excess / (p.r1 * p.gamma2);
  // dS2 = 0 forces the r1^2 denominator here (docs/errata.md).
  x.s1 = (p.mu2 * excess - p.r1 * p.r2 * (p.delta2 + p.mu2)) /
         (p.r1 * p.r1 * p.gamma2);

  X2ClosedForm out;
  out.feasible = x.s1 >= -kFeasibleTol && x.i2 >= -kFeasibleTol;
  out.eq.kind = EquilibriumKind::X2;
  out.eq.state = x;
  out.eq.provenance = Provenance::ClosedForm;
  out.eq.params_digest = params_digest(p);
  if (!out.feasible) {
    // The denominators can vanish for strongly infeasible points.
    const double den = p.A + x.s2 + x.i2;
    out.eq.residual_norm = den > 1e-12 ? residual_norm_at(x, p)
                                       : std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const auto nr = newton_refine(x, p, ComponentMask{false, true, false, false});
  if (nr.status == NewtonStatus::Converged &&
      nr.eq.residual_norm <= residual_norm_at(x, p)) {
    out.eq.state = nr.eq.state;
    out.eq.residual_norm = nr.eq.residual_norm;
  } else {
    out.eq.residual_norm = residual_norm_at(x, p);
  }
  if (!(out.eq.residual_norm < kResidualTol))
    throw std::runtime_error("X2 closed form failed its residual check");
  return out;
}

X2Feasibility x2_feasibility(const Parameters& p) {
  require_scenario(p, Scenario::M1Unidirectional, "x2_feasibility");
  X2Feasibility out;
  out.margins[0] = p.gamma2 * p.m21 - p.r1 * p.gamma2 * p.A -
                   (p.delta2 + p.mu2) * p.r1;
  out.margins[1] = p.mu2 * out.margins[0] - (p.delta2 + p.mu2) * p.r1 * p.r2;
  out.feasible = out.margins[0] >= 0.0 && out.margins[1] >= 0.0;
  return out;
}

CoexFilterResult coexistence_filter(const State& candidate, const Parameters& p) {
  require_scenario(p, Scenario::M1Unidirectional, "coexistence_filter");
  if (!(candidate.s1 > 0.0 && candidate.i1 > 0.0 && candidate.s2 > 0.0 &&
        candidate.i2 > 0.0))
    throw std::invalid_argument("coexistence_filter requires a strictly positive candidate");

  // Summing the patch equations pairwise eliminates the migration terms and
  // expresses S1 and S2 through (I1, I2):
  //   S1 * r1 = mu1 I1 + mu2 I2 - r2 S2
  //   S2 * (r1 gamma2 I2 - r2 gamma1 I1) = I2 * zden - (gamma1 mu1 I1^2
  //                                        - r1 (delta1+mu1) I1)
  // with zden = r1 (delta2+mu2) - gamma1 mu2 I1. Positivity of S1 and S2
  // yields the two necessary branches below. The published inequality sets
  // pair the I1/Z directions inconsistently and fail at residual-verified
  // interior equilibria; docs/errata.md records the counterexample.
  const double i1 = candidate.i1, i2 = candidate.i2, s2 = candidate.s2;
  CoexFilterResult out;

  const double w_lo = p.r1 * (p.delta1 + p.mu1) / (p.gamma1 * p.mu1);
  const double w_hi = p.r1 * (p.delta2 + p.mu2) / (p.gamma1 * p.mu2);
  out.z_window_ok = (w_lo < i1 && i1 < w_hi) || (w_hi < i1 && i1 < w_lo);

  const double z_den = p.r1 * (p.delta2 + p.mu2) - p.gamma1 * p.mu2 * i1;
  if (std::abs(z_den) < 1e-12) {
    out.branch = CoexBranch::UndefinedZ;
    out.z_value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.z_value =
      (p.gamma1 * p.mu1 * i1 * i1 - p.r1 * (p.delta1 + p.mu1) * i1) / z_den;

  const double s2_num = i2 * z_den - (p.gamma1 * p.mu1 * i1 * i1 -
                                      p.r1 * (p.delta1 + p.mu1) * i1);
  const double s2_den = p.r1 * p.gamma2 * i2 - p.r2 * p.gamma1 * i1;
  const bool s1_positive = p.r2 * s2 < p.mu1 * i1 + p.mu2 * i2;
  if (s2_den < 0.0 && s2_num < 0.0 && s1_positive)
    out.branch = CoexBranch::Coex1;  // I1 above the r1 gamma2 I2 / (r2 gamma1) split
  else if (s2_den > 0.0 && s2_num > 0.0 && s1_positive)
    out.branch = CoexBranch::Coex1Bis;
  else
    out.branch = CoexBranch::None;
  return out;
}

ReducedPolynomials uw_reduced_polynomials(const Parameters& p, UwPoint which) {
  require_scenario(p, Scenario::M2NoInfectedMigration, "uw_reduced_polynomials");
  ReducedPolynomials out;
  if (which == UwPoint::U) {
    require_positive(p.gamma1, "gamma1", "the U polynomials");
    require_positive(p.mu1, "mu1", "the U polynomials");
    const double s = (p.delta1 + p.mu1) / p.gamma1;
    const double a2 = p.m12 - p.r2 * p.A - p.r2 * s;
    out.g = {a2, p.A * a2, -p.m21 * p.A * s - p.m21 * s * s};
    out.f = {p.r2 * p.r2 / p.mu1,
             p.r1 * p.r2 * s / p.mu1 + p.r2 * p.r2 * p.A / p.mu1,
             p.r1 * p.r2 * p.A * s / p.mu1 + p.r2 * p.m21 * s / p.mu1,
             p.r1 * p.m21 * s * s / p.mu1};
  } else {
    require_positive(p.gamma2, "gamma2", "the W polynomials");
    require_positive(p.mu2, "mu2", "the W polynomials");
    const double s = (p.delta2 + p.mu2) / p.gamma2;
    const double a2 = p.m21 - p.r1 * p.A - p.r1 * s;
    out.g = {a2, p.A * a2, -p.m12 * p.A * s - p.m12 * s * s};
    out.f = {p.r1 * p.r1 / p.mu2,
             p.r2 * p.r1 * s / p.mu2 + p.r1 * p.r1 * p.A / p.mu2,
             p.r2 * p.r1 * p.A * s / p.mu2 + p.r1 * p.m12 * s / p.mu2,
             p.r2 * p.m12 * s * s / p.mu2};
  }
  return out;
}

UwSolveResult solve_u(const Parameters& p) { return solve_uw(p, UwPoint::U); }
UwSolveResult solve_w(const Parameters& p) { return solve_uw(p, UwPoint::W); }

NewtonResult newton_refine(const State& guess, const Parameters& p,
                           std::optional<ComponentMask> pinned) {
  for (int k = 0; k < 4; ++k)
    if (!std::isfinite(guess[k]))
      throw std::invalid_argument("newton_refine requires a finite guess");

  const ComponentMask mask = pinned.value_or(ComponentMask{});
  std::array<int, 4> free_idx{};
  int n_free = 0;
  for (int k = 0; k < 4; ++k)
    if (!mask[static_cast<std::size_t>(k)]) free_idx[static_cast<std::size_t>(n_free++)] = k;

  NewtonResult out;
  if (n_free == 0) {
    out.status = NewtonStatus::NonConverged;
    return out;
  }

  State x = guess;
  for (int k = 0; k < 4; ++k)
    if (mask[static_cast<std::size_t>(k)]) x[k] = 0.0;  // pins hold boundary zeros

  auto free_residual = [&](const State& x) {
    double r = 0.0;
    State f = rhs(x, p);
    for (int k = 0; k < n_free; ++k)
      r = std::max(r, std::abs(f[free_idx[static_cast<std::size_t>(k)]]));
    return r;
  };

  for (int iter = 0; iter <= 200; ++iter) {
    const State f = rhs(x, p);
    double r = 0.0;
    for (int k = 0; k < n_free; ++k)
      r = std::max(r, std::abs(f[free_idx[static_cast<std::size_t>(k)]]));
    if (!std::isfinite(r)) {
      out.status = NewtonStatus::NonConverged;
      out.iterations = iter;
      return out;
    }
    if (r < kNewtonTol) {
      const double full = residual_norm_at(x, p);
      if (full < kResidualTol) {
        out.status = NewtonStatus::Converged;
        out.eq = {classify_kind(x, p.scenario), x, full, Provenance::Newton,
                  params_digest(p)};
      } else {
        out.status = NewtonStatus::NonConverged;
      }
      out.iterations = iter;
      return out;
    }
    if (iter == 200) break;

    const Mat4 jac = jacobian(x, p);
    std::array<double, 16> a{};
    std::array<double, 4> b{};
    for (int i = 0; i < n_free; ++i) {
      b[static_cast<std::size_t>(i)] = -f[free_idx[static_cast<std::size_t>(i)]];
      for (int j = 0; j < n_free; ++j)
        a[static_cast<std::size_t>(i * n_free + j)] =
            jac(free_idx[static_cast<std::size_t>(i)], free_idx[static_cast<std::size_t>(j)]);
    }
    if (condition_1norm(a.data(), n_free) > 1e14) {
      out.status = NewtonStatus::SingularJacobian;
      out.iterations = iter;
      return out;
    }
    if (!lu_solve(a.data(), b.data(), n_free)) {
      out.status = NewtonStatus::SingularJacobian;
      out.iterations = iter;
      return out;
    }

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      State trial = x;
      for (int k = 0; k < n_free; ++k)
        trial[free_idx[static_cast<std::size_t>(k)]] +=
            lambda * b[static_cast<std::size_t>(k)];
      const double rt = free_residual(trial);
      if (std::isfinite(rt) && rt < r) {
        x = trial;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      out.status = NewtonStatus::NonConverged;
      out.iterations = iter + 1;
      return out;
    }
  }
  out.status = NewtonStatus::NonConverged;
  out.iterations = 200;
  return out;
}

std::vector<Equilibrium> enumerate_equilibria(const Parameters& p,
                                              const SearchBox& box, int n_starts,
                                              unsigned seed) {
  validate_params(p);
  std::vector<Equilibrium> found;

  auto add = [&](Equilibrium eq) {
    for (int k = 0; k < 4; ++k) {
      if (eq.state[k] < -kFeasibleTol) return;
      if (eq.state[k] < 0.0) eq.state[k] = 0.0;
    }
    eq.residual_norm = residual_norm_at(eq.state, p);  // independent re-check
    if (!(eq.residual_norm < kResidualTol)) return;
    for (const auto& other : found)
      if (max_norm_diff(other.state, eq.state) < kDedupTol) return;
    eq.kind = classify_kind(eq.state, p.scenario);
    found.push_back(std::move(eq));
  };

  add(origin_equilibrium(p));
  if (p.scenario == Scenario::M1Unidirectional) {
    if (p.gamma2 > 0.0 && p.mu2 > 0.0) {
      add(x1_closed_form(p));
      if (p.r1 > 0.0) {
        const auto x2 = x2_closed_form(p);
        if (x2.feasible) add(x2.eq);
      }
    }
  } else {
    if (p.gamma1 > 0.0 && p.mu1 > 0.0)
      for (const auto& eq : solve_u(p).equilibria) add(eq);
    if (p.gamma2 > 0.0 && p.mu2 > 0.0)
      for (const auto& eq : solve_w(p).equilibria) add(eq);
  }

  static constexpr unsigned kBases[4] = {2, 3, 5, 7};
  for (int s = 0; s < n_starts; ++s) {
    State start;
    for (int k = 0; k < 4; ++k) {
      const double u = radical_inverse(seed + 1 + static_cast<unsigned>(s),
                                       kBases[k]);
      start[k] = box.lo[static_cast<std::size_t>(k)] +
                 u * (box.hi[static_cast<std::size_t>(k)] -
                      box.lo[static_cast<std::size_t>(k)]);
    }
    const auto nr = newton_refine(start, p);
    if (nr.status == NewtonStatus::Converged) add(nr.eq);
  }

  std::sort(found.begin(), found.end(), [](const Equilibrium& a, const Equilibrium& b) {
    return a.state.array() < b.state.array();
  });
  return found;
}

std::vector<std::string> catalog_ids(const std::vector<Equilibrium>& catalog) {
  std::vector<std::string> ids;
  ids.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const std::string base = to_string(catalog[i].kind);
    int occurrence = 1;
    for (std::size_t j = 0; j < i; ++j)
      if (catalog[j].kind == catalog[i].kind) ++occurrence;
    ids.push_back(occurrence == 1 ? base : base + "#" + std::to_string(occurrence));
  }
  return ids;
}

}  // namespace patchsis
