#include "patchsis/model.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>

namespace patchsis {

namespace {

constexpr std::array<std::string_view, 4> kComponentNames = {"s1", "i1", "s2", "i2"};

constexpr std::array<std::string_view, 14> kParameterNames = {
    "r1", "r2", "gamma1", "gamma2", "delta1", "delta2", "mu1",
    "mu2", "m12", "m21", "n12", "n21", "A", "B"};

double* parameter_slot(Parameters& p, std::string_view name) {
  if (name == "r1") return &p.r1;
  if (name == "r2") return &p.r2;
  if (name == "gamma1") return &p.gamma1;
  if (name == "gamma2") return &p.gamma2;
  if (name == "delta1") return &p.delta1;
  if (name == "delta2") return &p.delta2;
  if (name == "mu1") return &p.mu1;
  if (name == "mu2") return &p.mu2;
  if (name == "m12") return &p.m12;
  if (name == "m21") return &p.m21;
  if (name == "n12") return &p.n12;
  if (name == "n21") return &p.n21;
  if (name == "A") return &p.A;
  if (name == "B") return &p.B;
  return nullptr;
}

}  // namespace

std::string to_string(Scenario scenario) {
  return scenario == Scenario::M1Unidirectional ? "M1" : "M2";
}

Scenario scenario_from_string(std::string_view text) {
  if (text == "M1") return Scenario::M1Unidirectional;
  if (text == "M2") return Scenario::M2NoInfectedMigration;
  throw std::invalid_argument("scenario must be \"M1\" or \"M2\"");
}

double State::operator[](int k) const {
  switch (k) {
    case 0: return s1;
    case 1: return i1;
    case 2: return s2;
    default: return i2;
  }
}

double& State::operator[](int k) {
  switch (k) {
    case 0: return s1;
    case 1: return i1;
    case 2: return s2;
    default: return i2;
  }
}

double max_norm(const State& x) {
  return std::max(std::max(std::abs(x.s1), std::abs(x.i1)),
                  std::max(std::abs(x.s2), std::abs(x.i2)));
}

double max_norm_diff(const State& a, const State& b) {
  return std::max(std::max(std::abs(a.s1 - b.s1), std::abs(a.i1 - b.i1)),
                  std::max(std::abs(a.s2 - b.s2), std::abs(a.i2 - b.i2)));
}

std::span<const std::string_view> component_names() { return kComponentNames; }

int component_index(std::string_view name) {
  for (int k = 0; k < 4; ++k)
    if (kComponentNames[static_cast<std::size_t>(k)] == name) return k;
  throw std::invalid_argument("unknown state component: " + std::string(name));
}

std::span<const std::string_view> parameter_names() { return kParameterNames; }

double get_parameter(const Parameters& p, std::string_view name) {
  auto* slot = parameter_slot(const_cast<Parameters&>(p), name);
  if (!slot) throw std::invalid_argument("unknown parameter: " + std::string(name));
  return *slot;
}

void set_parameter(Parameters& p, std::string_view name, double value) {
  auto* slot = parameter_slot(p, name);
  if (!slot) throw std::invalid_argument("unknown parameter: " + std::string(name));
  *slot = value;
}

Parameters validate_params(const Parameters& p, std::vector<std::string>* warnings) {
  for (auto name : kParameterNames) {
    const double v = get_parameter(p, name);
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " must be finite");
    if (v < 0.0) throw std::invalid_argument(std::string(name) + " must be >= 0");
  }
  if (p.A <= 0.0) throw std::invalid_argument("A must be > 0");
  if (p.B <= 0.0) throw std::invalid_argument("B must be > 0");
  if (p.scenario == Scenario::M1Unidirectional) {
    if (p.m12 != 0.0) throw std::invalid_argument("M1 forbids m12 != 0");
    if (p.n12 != 0.0) throw std::invalid_argument("M1 forbids n12 != 0");
  } else {
    if (p.n12 != 0.0) throw std::invalid_argument("M2 forbids n12 != 0");
    if (p.n21 != 0.0) throw std::invalid_argument("M2 forbids n21 != 0");
    if (warnings) warnings->push_back("B is ignored under M2 (no infected migration)");
  }
  return p;
}

State rhs(const State& x, const Parameters& p) {
  const double infect1 = p.gamma1 * x.s1 * x.i1;
  const double infect2 = p.gamma2 * x.s2 * x.i2;
  if (p.scenario == Scenario::M1Unidirectional) {
    // Inflow into patch 2 saturates with the arrival patch's population.
    const double sus_flow = p.m21 * x.s1 / (p.A + x.i2 + x.s2);
    const double inf_flow = p.n21 * x.i1 / (p.B + x.i2 + x.s2);
    return {p.r1 * x.s1 - infect1 + p.delta1 * x.i1 - sus_flow,
            infect1 - (p.delta1 + p.mu1) * x.i1 - inf_flow,
            p.r2 * x.s2 - infect2 + p.delta2 * x.i2 + sus_flow,
            infect2 - (p.delta2 + p.mu2) * x.i2 + inf_flow};
  }
  const double flow_1to2 = p.m21 * x.s1 / (p.A + x.i2 + x.s2);
  const double flow_2to1 = p.m12 * x.s2 / (p.A + x.s1 + x.i1);
  return {p.r1 * x.s1 - infect1 + p.delta1 * x.i1 - flow_1to2 + flow_2to1,
          infect1 - (p.delta1 + p.mu1) * x.i1,
          p.r2 * x.s2 - infect2 + p.delta2 * x.i2 + flow_1to2 - flow_2to1,
          infect2 - (p.delta2 + p.mu2) * x.i2};
}

Mat4 jacobian(const State& x, const Parameters& p) {
  Mat4 j;
  if (p.scenario == Scenario::M1Unidirectional) {
    const double da = p.A + x.s2 + x.i2;
    const double db = p.B + x.s2 + x.i2;
    const double eta1 = p.m21 / da;
    const double eta2 = p.m21 / (da * da);
    const double theta1 = p.n21 / db;
    const double theta2 = p.n21 / (db * db);

    j(0, 0) = p.r1 - p.gamma1 * x.i1 - eta1;
    j(0, 1) = -p.gamma1 * x.s1 + p.delta1;
    j(0, 2) = eta2 * x.s1;
    j(0, 3) = eta2 * x.s1;

    j(1, 0) = p.gamma1 * x.i1;
    j(1, 1) = p.gamma1 * x.s1 - p.delta1 - p.mu1 - theta1;
    j(1, 2) = theta2 * x.i1;
    j(1, 3) = theta2 * x.i1;

    j(2, 0) = eta1;
    j(2, 1) = 0.0;
    j(2, 2) = p.r2 - p.gamma2 * x.i2 - eta2 * x.s1;
    j(2, 3) = -p.gamma2 * x.s2 + p.delta2 - eta2 * x.s1;

    j(3, 0) = 0.0;
    j(3, 1) = theta1;
    j(3, 2) = p.gamma2 * x.i2 - theta2 * x.i1;
    j(3, 3) = p.gamma2 * x.s2 - p.delta2 - p.mu2 - theta2 * x.i1;
    return j;
  }

  const double d1 = p.A + x.s1 + x.i1;
  const double d2 = p.A + x.s2 + x.i2;
  const double alpha1 = p.m21 / d2;
  const double alpha2 = p.m21 / (d2 * d2);
  const double beta1 = p.m12 / d1;
  const double beta2 = p.m12 / (d1 * d1);

  j(0, 0) = p.r1 - p.gamma1 * x.i1 - alpha1 - beta2 * x.s2;
  j(0, 1) = -p.gamma1 * x.s1 + p.delta1 - beta2 * x.s2;
  j(0, 2) = alpha2 * x.s1 + beta1;
  j(0, 3) = alpha2 * x.s1;

  j(1, 0) = p.gamma1 * x.i1;
  j(1, 1) = p.gamma1 * x.s1 - p.delta1 - p.mu1;
  j(1, 2) = 0.0;
  j(1, 3) = 0.0;

  j(2, 0) = alpha1 + beta2 * x.s2;
  j(2, 1) = beta2 * x.s2;
  j(2, 2) = p.r2 - p.gamma2 * x.i2 - alpha2 * x.s1 - beta1;
  j(2, 3) = -p.gamma2 * x.s2 + p.delta2 - alpha2 * x.s1;

  j(3, 0) = 0.0;
  j(3, 1) = 0.0;
  j(3, 2) = p.gamma2 * x.i2;
  j(3, 3) = p.gamma2 * x.s2 - p.delta2 - p.mu2;
  return j;
}

double total_net_growth(const State& x, const Parameters& p) {
  return p.r1 * x.s1 + p.r2 * x.s2 - p.mu1 * x.i1 - p.mu2 * x.i2;
}

std::string params_digest(const Parameters& p) {
  char buf[512];
  int len = 0;
  for (auto name : kParameterNames) {
    len += std::snprintf(buf + len, sizeof(buf) - static_cast<std::size_t>(len),
                         "%s=%.17g;", std::string(name).c_str(),
                         get_parameter(p, name));
  }
  len += std::snprintf(buf + len, sizeof(buf) - static_cast<std::size_t>(len),
                       "scenario=%s", to_string(p.scenario).c_str());
  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(buf[i]);
    h *= 1099511628211ull;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016" PRIx64, h);
  return out;
}

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> all = [] {
    std::vector<Fixture> v;

    Parameters p;
    p.scenario = Scenario::M1Unidirectional;
    p.r1 = 2; p.r2 = 1; p.gamma1 = 0.5; p.gamma2 = 1; p.delta1 = 0.5; p.delta2 = 2;
    p.mu1 = 1; p.mu2 = 1; p.m12 = 0; p.m21 = 20; p.n12 = 0; p.n21 = 0.5; p.A = 1; p.B = 1;
    v.push_back({"M1_X1", p, "X1", {1, 1, 1, 1}, ""});

    p = Parameters{};
    p.scenario = Scenario::M1Unidirectional;
    p.r1 = 1; p.r2 = 1; p.gamma1 = 1; p.gamma2 = 0.5; p.delta1 = 1; p.delta2 = 1;
    p.mu1 = 1; p.mu2 = 3; p.m12 = 0; p.m21 = 30; p.n12 = 0; p.n21 = 1; p.A = 1; p.B = 1;
    v.push_back({"M1_X2", p, "X2", {1, 1, 1, 1},
                 "Published list garbles the middle entries (\"delta1=1delta2=mu1=1\"); "
                 "read as delta1=1, delta2=1, mu1=1. X2 = (55, 0, 8, 21) then zeroes the "
                 "rhs exactly, but its leading eigenvalue is +52.97, so the stability "
                 "claim does not hold under this reading; see docs/errata.md."});

    p = Parameters{};
    p.scenario = Scenario::M1Unidirectional;
    p.r1 = 1; p.r2 = 1; p.gamma1 = 0.5; p.gamma2 = 1; p.delta1 = 1; p.delta2 = 2;
    p.mu1 = 1; p.mu2 = 2; p.m12 = 0; p.m21 = 1; p.n12 = 0; p.n21 = 0.5; p.A = 1; p.B = 3;
    v.push_back({"M1_COEX", p, "COEX_M1", {1, 1, 1, 1}, ""});

    p = Parameters{};
    p.scenario = Scenario::M2NoInfectedMigration;
    p.r1 = 1; p.r2 = 0.5; p.gamma1 = 0.5; p.gamma2 = 1; p.delta1 = 1; p.delta2 = 0.2;
    p.mu1 = 1; p.mu2 = 10; p.m12 = 17; p.m21 = 10; p.n12 = 0; p.n21 = 0; p.A = 10; p.B = 1;
    v.push_back({"M2_U", p, "U", {1, 1, 1, 1},
                 "B is inert under M2; set to 1."});

    p = Parameters{};
    p.scenario = Scenario::M2NoInfectedMigration;
    p.r1 = 0.2; p.r2 = 1; p.gamma1 = 1; p.gamma2 = 2; p.delta1 = 1.8; p.delta2 = 0.3;
    p.mu1 = 1; p.mu2 = 6; p.m12 = 4; p.m21 = 8.8; p.n12 = 0; p.n21 = 0; p.A = 10; p.B = 1;
    v.push_back({"M2_W", p, "W", {1, 0, 1, 1},
                 "B is inert under M2; set to 1. Regression runs start on the "
                 "invariant face i1 = 0."});

    p = Parameters{};
    p.scenario = Scenario::M2NoInfectedMigration;
    p.r1 = 1; p.r2 = 1; p.gamma1 = 1; p.gamma2 = 1; p.delta1 = 2; p.delta2 = 0.5;
    p.mu1 = 2; p.mu2 = 1; p.m12 = 3; p.m21 = 1; p.n12 = 0; p.n21 = 0; p.A = 10; p.B = 1;
    v.push_back({"M2_COEX", p, "COEX_M2", {1, 1, 1, 1},
                 "Published list chains \"mu1=2mu2=2\"; read as mu1 = 2, mu2 = 1 "
                 "(the chain mu1 = 2*mu2 = 2). This reading passes the "
                 "stable-coexistence check: the interior point (4, 1.98719, 1.5, "
                 "1.52561) is stable, so the mu2 = 2 fallback is not used. "
                 "B is inert under M2; set to 1."});

    return v;
  }();
  return all;
}

const Fixture& fixture(std::string_view name) {
  for (const auto& f : fixtures())
    if (f.name == name) return f;
  throw std::invalid_argument("unknown fixture: " + std::string(name));
}

}  // namespace patchsis
