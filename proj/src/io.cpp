#include "patchsis/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace patchsis {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown key: " + path + key);
  }
}

double require_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

int require_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

BasinAxis parse_axis(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown_keys(j, {"component", "lo", "hi", "n"}, path + ".");
  for (const char* key : {"component", "lo", "hi", "n"})
    if (!j.contains(key))
      throw ConfigError("missing required key: " + path + "." + key);
  BasinAxis axis;
  if (!j["component"].is_string())
    throw ConfigError(path + ".component: expected a component name");
  try {
    axis.component = component_index(j["component"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".component: " + e.what());
  }
  axis.lo = require_number(j["lo"], path + ".lo");
  axis.hi = require_number(j["hi"], path + ".hi");
  axis.count = require_int(j["n"], path + ".n");
  if (axis.count < 1) throw ConfigError(path + ".n: must be >= 1");
  if (!(axis.lo <= axis.hi)) throw ConfigError(path + ": lo must be <= hi");
  return axis;
}

json axis_to_json(const BasinAxis& axis) {
  json j;
  j["component"] = std::string(component_names()[static_cast<std::size_t>(axis.component)]);
  j["lo"] = axis.lo;
  j["hi"] = axis.hi;
  j["n"] = axis.count;
  return j;
}

std::vector<double> parse_range_values(const std::string& text) {
  // "lo:hi:n" -> n evenly spaced values.
  double lo = 0, hi = 0;
  int n = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1)
    throw ConfigError("--range expects lo:hi:n");
  std::vector<double> values(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    values[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return values;
}

json state_to_json(const State& x) {
  return json::array({x.s1, x.i1, x.s2, x.i2});
}

json checks_to_json(const std::vector<NamedCheck>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json entry;
    entry["name"] = c.name;
    entry["pass"] = c.pass;
    entry["value"] = std::isfinite(c.value) ? json(c.value) : json(nullptr);
    arr.push_back(entry);
  }
  return arr;
}

json equilibrium_to_json(const Equilibrium& eq, const std::string& id) {
  json e;
  e["id"] = id;
  e["kind"] = to_string(eq.kind);
  e["state"] = state_to_json(eq.state);
  e["residual_norm"] = eq.residual_norm;
  e["provenance"] = to_string(eq.provenance);
  return e;
}

json params_to_json(const Parameters& p) {
  json obj;
  for (auto name : parameter_names())
    obj[std::string(name)] = get_parameter(p, name);
  return obj;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top-level value must be an object");
  reject_unknown_keys(
      j, {"scenario", "fixture", "params", "initial", "integration", "grid",
          "sweep", "scan"},
      "");

  if (!j.contains("scenario")) throw ConfigError("missing required key: scenario");
  if (!j["scenario"].is_string())
    throw ConfigError("scenario: expected \"M1\" or \"M2\"");
  Scenario scenario;
  try {
    scenario = scenario_from_string(j["scenario"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  RunConfig config;
  config.params.scenario = scenario;

  if (j.contains("fixture")) {
    if (!j["fixture"].is_string())
      throw ConfigError("fixture: expected a fixture name");
    const std::string name = j["fixture"].get<std::string>();
    const Fixture* fix = nullptr;
    try {
      fix = &fixture(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("fixture: ") + e.what());
    }
    if (fix->params.scenario != scenario)
      throw ConfigError("fixture scenario mismatch: " + name + " is " +
                        to_string(fix->params.scenario) + ", config says " +
                        to_string(scenario));
    config.params = fix->params;
    config.fixture_name = name;
    config.initial = fix->regression_initial;
  }

  if (j.contains("params")) {
    const json& pj = j["params"];
    if (!pj.is_object()) throw ConfigError("params: expected an object");
    for (const auto& [key, value] : pj.items()) {
      bool known = false;
      for (auto name : parameter_names())
        if (key == name) known = true;
      if (!known) throw ConfigError("params." + key + ": unknown parameter");
      set_parameter(config.params, key, require_number(value, "params." + key));
    }
    if (!config.fixture_name) {
      // Parameters the scenario forbids (or ignores) may be omitted.
      for (auto name : parameter_names()) {
        const bool optional =
            scenario == Scenario::M1Unidirectional
                ? (name == "m12" || name == "n12")
                : (name == "n12" || name == "n21" || name == "B");
        if (!optional && !pj.contains(std::string(name)))
          throw ConfigError("missing required key: params." + std::string(name));
      }
    }
  } else if (!config.fixture_name) {
    throw ConfigError("missing required key: params");
  }

  try {
    validate_params(config.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("initial")) {
    const json& ij = j["initial"];
    if (!ij.is_array() || ij.size() != 4)
      throw ConfigError("initial: expected 4 nonnegative numbers");
    State x;
    for (int k = 0; k < 4; ++k) {
      x[k] = require_number(ij[static_cast<std::size_t>(k)], "initial");
      if (!(x[k] >= 0.0) || !std::isfinite(x[k]))
        throw ConfigError("initial: expected 4 nonnegative numbers");
    }
    config.initial = x;
  }

  if (j.contains("integration")) {
    const json& gj = j["integration"];
    if (!gj.is_object()) throw ConfigError("integration: expected an object");
    reject_unknown_keys(gj, {"rel_tol", "abs_tol", "t_max", "max_steps", "initial_step"},
                        "integration.");
    auto positive = [&](const char* key, double fallback) {
      if (!gj.contains(key)) return fallback;
      const double v = require_number(gj[key], std::string("integration.") + key);
      if (!(v > 0.0))
        throw ConfigError(std::string("integration.") + key + ": must be > 0");
      return v;
    };
    config.integration.rel_tol = positive("rel_tol", config.integration.rel_tol);
    config.integration.abs_tol = positive("abs_tol", config.integration.abs_tol);
    config.integration.t_max = positive("t_max", config.integration.t_max);
    config.integration.initial_step =
        positive("initial_step", config.integration.initial_step);
    if (gj.contains("max_steps")) {
      const int steps = require_int(gj["max_steps"], "integration.max_steps");
      if (steps < 1) throw ConfigError("integration.max_steps: must be >= 1");
      config.integration.max_steps = steps;
    }
  }

  if (j.contains("grid")) {
    const json& gj = j["grid"];
    if (!gj.is_object()) throw ConfigError("grid: expected an object");
    reject_unknown_keys(gj, {"axes", "fixed"}, "grid.");
    if (!gj.contains("axes") || !gj["axes"].is_array() || gj["axes"].size() != 2)
      throw ConfigError("grid.axes: expected exactly 2 axis objects");
    BasinSpec spec;
    spec.axis1 = parse_axis(gj["axes"][0], "grid.axes[0]");
    spec.axis2 = parse_axis(gj["axes"][1], "grid.axes[1]");
    if (spec.axis1.component == spec.axis2.component)
      throw ConfigError("grid.axes: components must be distinct");
    if (!gj.contains("fixed") || !gj["fixed"].is_object())
      throw ConfigError("missing required key: grid.fixed");
    for (int k = 0; k < 4; ++k) {
      const std::string name(component_names()[static_cast<std::size_t>(k)]);
      const bool is_axis = k == spec.axis1.component || k == spec.axis2.component;
      if (is_axis) {
        if (gj["fixed"].contains(name))
          throw ConfigError("grid.fixed." + name + ": component is a grid axis");
        continue;
      }
      if (!gj["fixed"].contains(name))
        throw ConfigError("missing required key: grid.fixed." + name);
      spec.fixed[k] = require_number(gj["fixed"][name], "grid.fixed." + name);
      if (spec.fixed[k] < 0.0)
        throw ConfigError("grid.fixed." + name + ": must be >= 0");
    }
    reject_unknown_keys(gj["fixed"],
                        {std::string(component_names()[0]), std::string(component_names()[1]),
                         std::string(component_names()[2]), std::string(component_names()[3])},
                        "grid.fixed.");
    config.grid = spec;
  }

  if (j.contains("sweep")) {
    const json& sj = j["sweep"];
    if (!sj.is_object()) throw ConfigError("sweep: expected an object");
    reject_unknown_keys(sj, {"axis", "values"}, "sweep.");
    if (!sj.contains("axis") || !sj["axis"].is_string())
      throw ConfigError("missing required key: sweep.axis");
    SweepSpec sweep;
    sweep.axis = sj["axis"].get<std::string>();
    try {
      get_parameter(config.params, sweep.axis);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sweep.axis: ") + e.what());
    }
    if (!sj.contains("values") || !sj["values"].is_array())
      throw ConfigError("missing required key: sweep.values");
    for (const auto& v : sj["values"])
      sweep.values.push_back(require_number(v, "sweep.values"));
    config.sweep = sweep;
  }

  if (j.contains("scan")) {
    const json& sj = j["scan"];
    if (!sj.is_object()) throw ConfigError("scan: expected an object");
    reject_unknown_keys(sj, {"axis", "lo", "hi", "n"}, "scan.");
    for (const char* key : {"axis", "lo", "hi", "n"})
      if (!sj.contains(key))
        throw ConfigError(std::string("missing required key: scan.") + key);
    ScanSpec scan;
    if (!sj["axis"].is_string())
      throw ConfigError("scan.axis: expected a parameter name");
    scan.axis = sj["axis"].get<std::string>();
    try {
      get_parameter(config.params, scan.axis);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("scan.axis: ") + e.what());
    }
    scan.lo = require_number(sj["lo"], "scan.lo");
    scan.hi = require_number(sj["hi"], "scan.hi");
    scan.n = require_int(sj["n"], "scan.n");
    if (scan.n < 2) throw ConfigError("scan.n: must be >= 2");
    config.scan = scan;
  }

  return config;
}

std::string emit_config(const RunConfig& config) {
  json j;
  j["scenario"] = to_string(config.params.scenario);
  if (config.fixture_name) j["fixture"] = *config.fixture_name;
  j["params"] = params_to_json(config.params);
  if (config.initial) j["initial"] = state_to_json(*config.initial);
  json integ;
  integ["rel_tol"] = config.integration.rel_tol;
  integ["abs_tol"] = config.integration.abs_tol;
  integ["t_max"] = config.integration.t_max;
  integ["max_steps"] = static_cast<int>(config.integration.max_steps);
  integ["initial_step"] = config.integration.initial_step;
  j["integration"] = integ;
  if (config.grid) {
    json g;
    g["axes"] = json::array({axis_to_json(config.grid->axis1),
                             axis_to_json(config.grid->axis2)});
    json fixed;
    for (int k = 0; k < 4; ++k) {
      if (k == config.grid->axis1.component || k == config.grid->axis2.component)
        continue;
      fixed[std::string(component_names()[static_cast<std::size_t>(k)])] =
          config.grid->fixed[k];
    }
    g["fixed"] = fixed;
    j["grid"] = g;
  }
  if (config.sweep) {
    json s;
    s["axis"] = config.sweep->axis;
    s["values"] = config.sweep->values;
    j["sweep"] = s;
  }
  if (config.scan) {
    json s;
    s["axis"] = config.scan->axis;
    s["lo"] = config.scan->lo;
    s["hi"] = config.scan->hi;
    s["n"] = config.scan->n;
    j["scan"] = s;
  }
  return j.dump(2) + "\n";
}

std::string emit_trajectory_csv(const Trajectory& traj) {
  std::string out = "t,S1,I1,S2,I2\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const State& x = traj.states[k];
    out += fmt17(traj.times[k]);
    out += ',';
    out += fmt17(x.s1);
    out += ',';
    out += fmt17(x.i1);
    out += ',';
    out += fmt17(x.s2);
    out += ',';
    out += fmt17(x.i2);
    out += '\n';
  }
  out += "# verdict=" + to_string(traj.verdict);
  if (!traj.equilibrium_id.empty()) out += " equilibrium=" + traj.equilibrium_id;
  out += '\n';
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,S1,I1,S2,I2")
    throw ConfigError("trajectory CSV: bad header");
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto vpos = line.find("verdict=");
      if (vpos != std::string::npos) {
        std::string v = line.substr(vpos + 8);
        const auto space = v.find(' ');
        std::string word = space == std::string::npos ? v : v.substr(0, space);
        if (word == "CONVERGED") traj.verdict = TrajectoryVerdict::Converged;
        else if (word == "BLEW_UP") traj.verdict = TrajectoryVerdict::BlewUp;
        else traj.verdict = TrajectoryVerdict::TimedOut;
      }
      const auto epos = line.find("equilibrium=");
      if (epos != std::string::npos) traj.equilibrium_id = line.substr(epos + 12);
      continue;
    }
    double t = 0;
    State x;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &x.s1, &x.i1, &x.s2,
                    &x.i2) != 5)
      throw ConfigError("trajectory CSV: bad row: " + line);
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  return traj;
}

std::string emit_equilibria_report(const std::vector<Equilibrium>& catalog,
                                   const Parameters& p) {
  json root;
  root["scenario"] = to_string(p.scenario);
  root["params"] = params_to_json(p);
  root["params_digest"] = params_digest(p);
  json arr = json::array();
  const auto ids = catalog_ids(catalog);
  for (std::size_t k = 0; k < catalog.size(); ++k)
    arr.push_back(equilibrium_to_json(catalog[k], ids[k]));
  root["equilibria"] = arr;
  return root.dump(2) + "\n";
}

std::string emit_report(const std::vector<Equilibrium>& catalog,
                        const std::vector<StabilityVerdict>& verdicts,
                        const Parameters& p) {
  json root;
  root["scenario"] = to_string(p.scenario);
  root["params"] = params_to_json(p);
  root["params_digest"] = params_digest(p);
  json arr = json::array();
  const auto ids = catalog_ids(catalog);
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    json e = equilibrium_to_json(catalog[k], ids[k]);
    if (k < verdicts.size()) {
      const auto& v = verdicts[k];
      e["class"] = to_string(v.cls);
      e["max_real"] = v.spectrum.max_real;
      e["margin"] = v.spectrum.margin;
      json eig = json::array();
      for (const auto& ev : v.spectrum.eigenvalues)
        eig.push_back(json::array({ev.real(), ev.imag()}));
      e["eigenvalues"] = eig;
      e["checks"] = checks_to_json(v.checks);
    }
    arr.push_back(e);
  }
  root["equilibria"] = arr;
  return root.dump(2) + "\n";
}

namespace {

struct CliCommon {
  std::string config_path;
  std::string fixture_name;
  std::string initial;
  std::string out_path;
  double t_max = -1, rel_tol = -1, abs_tol = -1;
  int threads = 1;
};

void add_common(CLI::App* cmd, CliCommon& c) {
  cmd->add_option("--config", c.config_path, "JSON run configuration file");
  cmd->add_option("--fixture", c.fixture_name, "built-in fixture name");
  cmd->add_option("--initial", c.initial, "initial state a,b,c,d");
  cmd->add_option("--out", c.out_path, "write data to this file instead of stdout");
  cmd->add_option("--t-max", c.t_max, "integration horizon");
  cmd->add_option("--rel-tol", c.rel_tol, "integrator relative tolerance");
  cmd->add_option("--abs-tol", c.abs_tol, "integrator absolute tolerance");
  cmd->add_option("--threads", c.threads, "worker threads for grids and sweeps");
}

RunConfig resolve_config(const CliCommon& c, std::vector<std::string>* warnings) {
  RunConfig config;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("cannot open config file: " + c.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    config = parse_config(buf.str());
  } else if (!c.fixture_name.empty()) {
    const Fixture& fix = fixture(c.fixture_name);
    config.params = fix.params;
    config.fixture_name = fix.name;
    config.initial = fix.regression_initial;
  } else {
    throw ConfigError("either --config or --fixture is required");
  }
  if (!c.initial.empty()) {
    State x;
    if (std::sscanf(c.initial.c_str(), "%lf,%lf,%lf,%lf", &x.s1, &x.i1, &x.s2,
                    &x.i2) != 4)
      throw ConfigError("--initial expects four comma-separated numbers");
    for (int k = 0; k < 4; ++k)
      if (!(x[k] >= 0.0)) throw ConfigError("--initial components must be >= 0");
    config.initial = x;
  }
  if (c.t_max > 0) config.integration.t_max = c.t_max;
  if (c.rel_tol > 0) config.integration.rel_tol = c.rel_tol;
  if (c.abs_tol > 0) config.integration.abs_tol = c.abs_tol;
  validate_params(config.params, warnings);
  return config;
}

void write_output(const std::string& data, const CliCommon& c, std::ostream& out) {
  if (c.out_path.empty()) {
    out << data;
    return;
  }
  std::ofstream file(c.out_path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file: " + c.out_path);
  file << data;
}

BasinSpec parse_grid_flags(const std::string& grid, const std::string& fixed) {
  BasinSpec spec;
  char c1[8] = {0}, c2[8] = {0};
  double lo1, hi1, lo2, hi2;
  int n1, n2;
  if (std::sscanf(grid.c_str(), "%7[a-z0-9]:%lf:%lf:%d,%7[a-z0-9]:%lf:%lf:%d",
                  c1, &lo1, &hi1, &n1, c2, &lo2, &hi2, &n2) != 8)
    throw ConfigError("--grid expects comp:lo:hi:n,comp:lo:hi:n");
  spec.axis1 = {component_index(c1), lo1, hi1, n1};
  spec.axis2 = {component_index(c2), lo2, hi2, n2};
  if (spec.axis1.component == spec.axis2.component)
    throw ConfigError("--grid components must be distinct");

  std::array<bool, 4> have{};
  std::stringstream ss(fixed);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--fixed expects comp=value,comp=value");
    const int idx = component_index(item.substr(0, eq));
    spec.fixed[idx] = std::strtod(item.c_str() + eq + 1, nullptr);
    have[static_cast<std::size_t>(idx)] = true;
  }
  for (int k = 0; k < 4; ++k) {
    const bool is_axis = k == spec.axis1.component || k == spec.axis2.component;
    if (!is_axis && !have[static_cast<std::size_t>(k)])
      throw ConfigError("--fixed must set component " +
                        std::string(component_names()[static_cast<std::size_t>(k)]));
  }
  return spec;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string out =
      "value,error,id,kind,s1,i1,s2,i2,residual_norm,class,max_real\n";
  for (const auto& row : rows) {
    out += fmt17(row.value);
    out += ',';
    if (!row.error.empty()) {
      out += row.error;
      out += ",,,,,,,,,\n";
      continue;
    }
    out += ',';
    out += to_string(row.equilibrium.kind);
    out += ',';
    out += to_string(row.equilibrium.kind);
    out += ',';
    const State& x = row.equilibrium.state;
    out += fmt17(x.s1);
    out += ',';
    out += fmt17(x.i1);
    out += ',';
    out += fmt17(x.s2);
    out += ',';
    out += fmt17(x.i2);
    out += ',';
    out += fmt17(row.equilibrium.residual_norm);
    out += ',';
    out += to_string(row.cls);
    out += ',';
    out += fmt17(row.max_real);
    out += '\n';
  }
  return out;
}

std::string basin_table(const BasinMap& map) {
  const auto names = component_names();
  std::string out = "# basin params_digest=" + map.params_digest + " fixed";
  for (int k = 0; k < 4; ++k) {
    if (k == map.spec.axis1.component || k == map.spec.axis2.component) continue;
    out += ' ';
    out += std::string(names[static_cast<std::size_t>(k)]) + "=" +
           fmt17(map.spec.fixed[k]);
  }
  out += '\n';
  out += std::string(names[static_cast<std::size_t>(map.spec.axis1.component)]) + "," +
         std::string(names[static_cast<std::size_t>(map.spec.axis2.component)]) +
         ",label\n";
  for (int i = 0; i < map.spec.axis1.count; ++i) {
    const double v1 = map.spec.axis1.count <= 1
                          ? map.spec.axis1.lo
                          : map.spec.axis1.lo + (map.spec.axis1.hi - map.spec.axis1.lo) *
                                                    i / (map.spec.axis1.count - 1);
    for (int j = 0; j < map.spec.axis2.count; ++j) {
      const double v2 = map.spec.axis2.count <= 1
                            ? map.spec.axis2.lo
                            : map.spec.axis2.lo +
                                  (map.spec.axis2.hi - map.spec.axis2.lo) * j /
                                      (map.spec.axis2.count - 1);
      out += fmt17(v1);
      out += ',';
      out += fmt17(v2);
      out += ',';
      out += map.labels[static_cast<std::size_t>(i) *
                            static_cast<std::size_t>(map.spec.axis2.count) +
                        static_cast<std::size_t>(j)];
      out += '\n';
    }
  }
  return out;
}

std::string hopf_table(const std::vector<HopfPoint>& points) {
  std::string out = "value,residual_before,residual_after,complex_pair_real_part\n";
  for (const auto& pt : points) {
    out += fmt17(pt.value);
    out += ',';
    out += fmt17(pt.residual_before);
    out += ',';
    out += fmt17(pt.residual_after);
    out += ',';
    out += fmt17(pt.complex_pair_real_part);
    out += '\n';
  }
  return out;
}

std::string fixtures_report() {
  json arr = json::array();
  for (const auto& f : fixtures()) {
    json e;
    e["name"] = f.name;
    e["scenario"] = to_string(f.params.scenario);
    e["expected_kind"] = f.expected_kind;
    e["note"] = f.note;
    e["regression_initial"] = state_to_json(f.regression_initial);
    e["params"] = params_to_json(f.params);
    arr.push_back(e);
  }
  return arr.dump(2) + "\n";
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Two-patch SIS metapopulation dynamics engine"};
  app.set_help_flag("-h,--help", "print usage");

  CliCommon common;
  std::string axis, range, branch, grid, fixed;

  CLI::App* simulate = app.add_subcommand("simulate", "integrate a trajectory, emit CSV");
  add_common(simulate, common);
  CLI::App* equilibria_cmd =
      app.add_subcommand("equilibria", "enumerate equilibria, emit a JSON report");
  add_common(equilibria_cmd, common);
  CLI::App* stability_cmd = app.add_subcommand(
      "stability", "enumerate + classify equilibria, emit a full JSON report");
  add_common(stability_cmd, common);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "re-run the equilibrium analysis along a parameter axis");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--axis", axis, "parameter to sweep");
  sweep_cmd->add_option("--range", range, "lo:hi:n");
  CLI::App* hopf_cmd =
      app.add_subcommand("hopf-scan", "scan a parameter range for Hopf crossings");
  add_common(hopf_cmd, common);
  hopf_cmd->add_option("--axis", axis, "parameter to scan");
  hopf_cmd->add_option("--range", range, "lo:hi:n");
  hopf_cmd->add_option("--branch", branch, "equilibrium kind seeding the branch");
  CLI::App* basin_cmd =
      app.add_subcommand("basin", "label a grid of initial conditions by attractor");
  add_common(basin_cmd, common);
  basin_cmd->add_option("--grid", grid, "comp:lo:hi:n,comp:lo:hi:n");
  basin_cmd->add_option("--fixed", fixed, "comp=value,comp=value");
  CLI::App* fixtures_cmd =
      app.add_subcommand("fixtures", "list the built-in parameter sets");
  fixtures_cmd->add_option("--out", common.out_path, "write to file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  if (app.get_subcommands().empty()) {
    err << app.help();
    return 1;
  }

  try {
    if (fixtures_cmd->parsed()) {
      write_output(fixtures_report(), common, out);
      return 0;
    }

    std::vector<std::string> warnings;
    RunConfig config = resolve_config(common, &warnings);
    print_warnings(warnings, err);
    const Parameters& p = config.params;

    if (simulate->parsed()) {
      const State initial = config.initial.value_or(State{1, 1, 1, 1});
      Trajectory traj = integrate(initial, p, config.integration);
      const auto catalog = enumerate_equilibria(p);
      if (traj.verdict == TrajectoryVerdict::Converged) {
        if (const auto hit = detect_convergence(traj, catalog))
          traj.equilibrium_id = catalog_ids(catalog)[*hit];
      }
      write_output(emit_trajectory_csv(traj), common, out);
      if (traj.verdict == TrajectoryVerdict::BlewUp) {
        err << "error: trajectory blew up at t=" << traj.times.back() << "\n";
        return 2;
      }
      return 0;
    }

    if (equilibria_cmd->parsed()) {
      const auto catalog = enumerate_equilibria(p);
      write_output(emit_equilibria_report(catalog, p), common, out);
      return 0;
    }

    if (stability_cmd->parsed()) {
      const auto catalog = enumerate_equilibria(p);
      std::vector<StabilityVerdict> verdicts;
      verdicts.reserve(catalog.size());
      for (const auto& eq : catalog) verdicts.push_back(classify(eq, p));
      write_output(emit_report(catalog, verdicts, p), common, out);
      return 0;
    }

    if (sweep_cmd->parsed()) {
      SweepSpec spec;
      if (config.sweep) spec = *config.sweep;
      if (!axis.empty()) spec.axis = axis;
      if (!range.empty()) spec.values = parse_range_values(range);
      if (spec.axis.empty()) throw ConfigError("sweep needs --axis or a config sweep block");
      const auto rows = parameter_sweep(p, spec.axis, spec.values, common.threads);
      write_output(sweep_table(rows), common, out);
      return 0;
    }

    if (hopf_cmd->parsed()) {
      ScanSpec spec;
      if (config.scan) spec = *config.scan;
      if (!axis.empty()) spec.axis = axis;
      if (!range.empty()) {
        const auto values = parse_range_values(range);
        if (values.size() < 2) throw ConfigError("--range needs n >= 2");
        spec.lo = values.front();
        spec.hi = values.back();
        spec.n = static_cast<int>(values.size());
      }
      if (spec.axis.empty() || spec.n < 2)
        throw ConfigError("hopf-scan needs --axis and --range (or a config scan block)");

      const auto catalog = enumerate_equilibria(p);
      if (catalog.empty()) throw ConfigError("no equilibria found to seed the branch");
      std::string wanted = branch;
      if (wanted.empty() && config.fixture_name)
        wanted = fixture(*config.fixture_name).expected_kind;
      const Equilibrium* seed = nullptr;
      for (const auto& eq : catalog)
        if (to_string(eq.kind) == wanted) {
          seed = &eq;
          break;
        }
      if (!seed) seed = &catalog.front();
      const auto points = hopf_scan(p, spec.axis, spec.lo, spec.hi, spec.n, *seed);
      write_output(hopf_table(points), common, out);
      return 0;
    }

    if (basin_cmd->parsed()) {
      BasinSpec spec;
      if (config.grid) spec = *config.grid;
      if (!grid.empty()) spec = parse_grid_flags(grid, fixed);
      if (spec.axis1.count < 1 || spec.axis2.count < 1 ||
          spec.axis1.component == spec.axis2.component)
        throw ConfigError("basin needs --grid/--fixed or a config grid block");
      const auto map = basin_grid(p, spec, config.integration, common.threads);
      write_output(basin_table(map), common, out);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const BranchLost& e) {
    err << "error: " << e.what();
    if (std::isfinite(e.last_good)) err << " (last good value " << e.last_good << ")";
    err << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  err << app.help();
  return 1;
}

}  // namespace patchsis
