// scenario.hpp — scenario configs (parse/serialize/validate), the preset
// registry, the four trajectory engines, and deterministic CSV emission
#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fewmode/gaussian_state.hpp"
#include "fewmode/model.hpp"
#include "fewmode/ohmic.hpp"
#include "fewmode/oracle.hpp"
#include "fewmode/zsol.hpp"

namespace fewmode {

// ----------------------------------------------------------------------------
// configuration
// ----------------------------------------------------------------------------

struct ScenarioConfig {
  SystemParams sys;

  // environment: exactly one source — explicit couplings, the Drude-weighted
  // generator over an explicit frequency list, or the Ohmic discretizer
  double env_m = 1.0;
  double beta = 1.0;
  std::vector<double> omegas;
  std::vector<double> couplings;
  std::optional<double> drude_gamma, drude_Gamma;
  std::optional<double> ohmic_gamma0, ohmic_Lambda;
  std::optional<int> ohmic_modes;

  GaussianState state0;

  double t_max = 30.0;
  int n_points = 301;
  std::vector<std::string> engines;
  std::string output_prefix = "run";
};

inline const std::vector<std::string>& known_engines() {
  static const std::vector<std::string> v = {"exact", "markovian", "oracle", "ohmic"};
  return v;
}

// ----------------------------------------------------------------------------
// plain-text config format: one dotted key per line, `key = value`,
// comma-separated lists, # comments
// ----------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& v, const std::string& key, int line) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": " + key + ": not a number: '" + v +
                      "'");
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_numbers(const std::string& v, const std::string& key,
                                         int line) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number(item, key, line));
  return out;
}

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_number(xs[i]);
  }
  return out;
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(raw.substr(0, eq));
    const std::string val = detail::trim(raw.substr(eq + 1));

    if (key == "system.M") cfg.sys.M = detail::parse_number(val, key, line);
    else if (key == "system.Omega") cfg.sys.Omega = detail::parse_number(val, key, line);
    else if (key == "system.hbar") cfg.sys.hbar = detail::parse_number(val, key, line);
    else if (key == "env.m") cfg.env_m = detail::parse_number(val, key, line);
    else if (key == "env.beta") cfg.beta = detail::parse_number(val, key, line);
    else if (key == "env.omegas") cfg.omegas = detail::parse_numbers(val, key, line);
    else if (key == "env.couplings") cfg.couplings = detail::parse_numbers(val, key, line);
    else if (key == "drude.gamma") cfg.drude_gamma = detail::parse_number(val, key, line);
    else if (key == "drude.Gamma") cfg.drude_Gamma = detail::parse_number(val, key, line);
    else if (key == "ohmic.gamma0") cfg.ohmic_gamma0 = detail::parse_number(val, key, line);
    else if (key == "ohmic.Lambda") cfg.ohmic_Lambda = detail::parse_number(val, key, line);
    else if (key == "ohmic.n_modes")
      cfg.ohmic_modes = static_cast<int>(detail::parse_number(val, key, line));
    else if (key == "state.dX2") cfg.state0.dX2 = detail::parse_number(val, key, line);
    else if (key == "state.dP2") cfg.state0.dP2 = detail::parse_number(val, key, line);
    else if (key == "state.dXP") cfg.state0.dXP = detail::parse_number(val, key, line);
    else if (key == "state.X0") cfg.state0.Xc = detail::parse_number(val, key, line);
    else if (key == "state.P0") cfg.state0.Pc = detail::parse_number(val, key, line);
    else if (key == "grid.t_max") cfg.t_max = detail::parse_number(val, key, line);
    else if (key == "grid.n_points")
      cfg.n_points = static_cast<int>(detail::parse_number(val, key, line));
    else if (key == "engines") cfg.engines = detail::split_list(val);
    else if (key == "output.prefix") cfg.output_prefix = val;
    else
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
  return cfg;
}

inline std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  const auto put = [&](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  put("system.M", detail::format_number(cfg.sys.M));
  put("system.Omega", detail::format_number(cfg.sys.Omega));
  put("system.hbar", detail::format_number(cfg.sys.hbar));
  put("env.m", detail::format_number(cfg.env_m));
  put("env.beta", detail::format_number(cfg.beta));
  if (!cfg.omegas.empty()) put("env.omegas", detail::format_list(cfg.omegas));
  if (!cfg.couplings.empty()) put("env.couplings", detail::format_list(cfg.couplings));
  if (cfg.drude_gamma) put("drude.gamma", detail::format_number(*cfg.drude_gamma));
  if (cfg.drude_Gamma) put("drude.Gamma", detail::format_number(*cfg.drude_Gamma));
  if (cfg.ohmic_gamma0) put("ohmic.gamma0", detail::format_number(*cfg.ohmic_gamma0));
  if (cfg.ohmic_Lambda) put("ohmic.Lambda", detail::format_number(*cfg.ohmic_Lambda));
  if (cfg.ohmic_modes) put("ohmic.n_modes", std::to_string(*cfg.ohmic_modes));
  put("state.dX2", detail::format_number(cfg.state0.dX2));
  put("state.dP2", detail::format_number(cfg.state0.dP2));
  put("state.dXP", detail::format_number(cfg.state0.dXP));
  put("state.X0", detail::format_number(cfg.state0.Xc));
  put("state.P0", detail::format_number(cfg.state0.Pc));
  put("grid.t_max", detail::format_number(cfg.t_max));
  put("grid.n_points", std::to_string(cfg.n_points));
  std::string engines;
  for (std::size_t i = 0; i < cfg.engines.size(); ++i) {
    if (i) engines += ", ";
    engines += cfg.engines[i];
  }
  put("engines", engines);
  put("output.prefix", cfg.output_prefix);
  return out;
}

// all invariant violations, one message per field path; empty result = valid
inline std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
  std::vector<std::string> bad;
  if (!(cfg.sys.M > 0.0)) bad.push_back("system.M: must be > 0");
  if (!(cfg.sys.Omega > 0.0)) bad.push_back("system.Omega: must be > 0");
  if (!(cfg.sys.hbar > 0.0)) bad.push_back("system.hbar: must be > 0");
  if (!(cfg.env_m > 0.0)) bad.push_back("env.m: must be > 0");
  if (!(cfg.beta > 0.0)) bad.push_back("env.beta: must be > 0");

  for (std::size_t k = 0; k < cfg.omegas.size(); ++k) {
    if (!(cfg.omegas[k] > 0.0)) {
      bad.push_back("env.omegas: entry " + std::to_string(k) + " must be > 0");
      break;
    }
    if (k > 0 && !(cfg.omegas[k] > cfg.omegas[k - 1])) {
      bad.push_back("env.omegas: values must be strictly increasing (entry " +
                    std::to_string(k) + ")");
      break;
    }
  }

  const bool has_explicit = !cfg.couplings.empty();
  const bool has_drude = cfg.drude_gamma.has_value() || cfg.drude_Gamma.has_value();
  const bool has_ohmic = cfg.ohmic_gamma0.has_value() || cfg.ohmic_Lambda.has_value() ||
                         cfg.ohmic_modes.has_value();
  const int sources = int(has_explicit) + int(has_drude) + int(has_ohmic);
  if (sources == 0)
    bad.push_back("env.couplings: an environment source is required "
                  "(explicit couplings, drude.*, or ohmic.*)");
  if (sources > 1)
    bad.push_back("env.couplings/drude/ohmic: environment sources are mutually exclusive");
  if (has_explicit && cfg.couplings.size() != cfg.omegas.size())
    bad.push_back("env.couplings: length must match env.omegas");
  if (has_drude) {
    if (!cfg.drude_gamma || !cfg.drude_Gamma)
      bad.push_back("drude: both drude.gamma and drude.Gamma are required");
    else if (!(*cfg.drude_Gamma > 0.0))
      bad.push_back("drude.Gamma: must be > 0");
    if (cfg.omegas.empty()) bad.push_back("env.omegas: required by the drude generator");
  }
  if (has_ohmic) {
    if (!cfg.ohmic_gamma0 || !cfg.ohmic_Lambda || !cfg.ohmic_modes)
      bad.push_back("ohmic: ohmic.gamma0, ohmic.Lambda, and ohmic.n_modes are all required");
    else {
      if (!(*cfg.ohmic_gamma0 > 0.0)) bad.push_back("ohmic.gamma0: must be > 0");
      if (!(*cfg.ohmic_Lambda > *cfg.ohmic_gamma0))
        bad.push_back("ohmic.Lambda: must exceed ohmic.gamma0");
      if (*cfg.ohmic_modes < 2) bad.push_back("ohmic.n_modes: must be at least 2");
    }
    if (!cfg.omegas.empty())
      bad.push_back("env.omegas: not allowed with the ohmic discretizer");
  }

  if (!(cfg.state0.dX2 > 0.0)) bad.push_back("state.dX2: must be > 0");
  if (!(cfg.state0.dP2 > 0.0)) bad.push_back("state.dP2: must be > 0");
  if (cfg.state0.dX2 > 0.0 && cfg.state0.dP2 > 0.0 &&
      cfg.state0.uncertainty() < cfg.sys.hbar * cfg.sys.hbar / 4.0 - kFloorSlack)
    bad.push_back("state: uncertainty below the physical floor hbar^2/4");

  if (!(cfg.t_max > 0.0)) bad.push_back("grid.t_max: must be > 0");
  if (cfg.n_points < 2) bad.push_back("grid.n_points: must be at least 2");

  if (cfg.engines.empty()) bad.push_back("engines: at least one engine is required");
  for (const auto& e : cfg.engines) {
    bool ok = false;
    for (const auto& k : known_engines()) ok = ok || (e == k);
    if (!ok) bad.push_back("engines: unknown engine '" + e + "'");
    if (e == "ohmic" && !has_ohmic)
      bad.push_back("engines: 'ohmic' requires the ohmic.* environment source");
  }
  return bad;
}

inline EnvironmentSpec build_environment(const ScenarioConfig& cfg) {
  if (cfg.drude_gamma)
    return drude_environment(cfg.sys, cfg.env_m, cfg.beta, cfg.omegas, *cfg.drude_gamma,
                             *cfg.drude_Gamma);
  if (cfg.ohmic_gamma0)
    return discretize_ohmic(*cfg.ohmic_gamma0, *cfg.ohmic_Lambda, *cfg.ohmic_modes, cfg.env_m,
                            cfg.sys.M, cfg.beta);
  EnvironmentSpec env;
  env.m = cfg.env_m;
  env.beta = cfg.beta;
  env.omegas = cfg.omegas;
  env.couplings = cfg.couplings;
  env.validate();
  return env;
}

// ----------------------------------------------------------------------------
// preset registry
// ----------------------------------------------------------------------------

struct Preset {
  std::string name;
  std::string description;
  ScenarioConfig config;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> reg = [] {
    std::vector<Preset> v;

    const auto packet = [] {
      GaussianState st;
      st.dX2 = 0.04;  // ΔX_0 = 1/5
      st.dP2 = 25.0;  // ΔP_0 = 5
      st.dXP = 0.0;
      st.Xc = 0.0;
      st.Pc = 0.0;
      return st;
    }();

    const std::vector<double> low_band = {0.48, 0.86, 1.72, 1.84, 1.89};
    const std::vector<double> high_band = {2.43, 2.66, 2.69, 2.70, 2.77};
    const std::vector<double> deep_band = {0.19, 0.23, 0.44, 0.89, 0.96};

    const auto fig_base = [&](std::vector<double> omegas, double gamma, std::string prefix,
                              std::vector<std::string> engines) {
      ScenarioConfig c;
      c.sys = {1.0, 1.0, 1.0};
      c.env_m = 1.0;
      c.beta = 1.0 / 1.15;
      c.omegas = std::move(omegas);
      c.drude_gamma = gamma;
      c.drude_Gamma = 500.0;
      c.state0 = packet;
      c.t_max = 30.0;
      c.n_points = 301;
      c.engines = std::move(engines);
      c.output_prefix = std::move(prefix);
      return c;
    };

    const std::vector<std::string> fig1_engines = {"exact", "oracle"};
    const std::vector<std::string> fig2_engines = {"exact", "markovian"};

    v.push_back({"fig1a", "width dynamics, weak coupling (bounded regime)",
                 fig_base(low_band, 0.01, "fig1a", fig1_engines)});
    v.push_back({"fig1b", "width dynamics at strength balance",
                 fig_base(low_band, 0.39, "fig1b", fig1_engines)});
    v.push_back({"fig1c", "width dynamics, strong coupling (unstable regime)",
                 fig_base(low_band, 0.58, "fig1c", fig1_engines)});
    v.push_back({"fig1d", "decoherence measure, weak coupling (bounded regime)",
                 fig_base(low_band, 0.01, "fig1d", fig1_engines)});
    v.push_back({"fig1e", "decoherence measure at strength balance",
                 fig_base(low_band, 0.39, "fig1e", fig1_engines)});
    v.push_back({"fig1f", "decoherence measure, strong coupling (unstable regime)",
                 fig_base(low_band, 0.58, "fig1f", fig1_engines)});

    v.push_back({"fig2a", "Markovian vs exact width, high-frequency band",
                 fig_base(high_band, 0.39, "fig2a", fig2_engines)});
    v.push_back({"fig2b", "Markovian vs exact width, balance band",
                 fig_base(low_band, 0.39, "fig2b", fig2_engines)});
    v.push_back({"fig2c", "Markovian vs exact width, low-frequency band",
                 fig_base(deep_band, 0.39, "fig2c", fig2_engines)});
    v.push_back({"fig2d", "Markovian vs exact decoherence, high-frequency band",
                 fig_base(high_band, 0.39, "fig2d", fig2_engines)});
    v.push_back({"fig2e", "Markovian vs exact decoherence, balance band",
                 fig_base(low_band, 0.39, "fig2e", fig2_engines)});
    v.push_back({"fig2f", "Markovian vs exact decoherence, low-frequency band",
                 fig_base(deep_band, 0.39, "fig2f", fig2_engines)});

    {
      ScenarioConfig c;
      c.sys = {1.0, 1.0, 1.0};
      c.env_m = 1.0;
      c.beta = 1.0 / 1.15;
      c.omegas = {1.0};
      c.couplings = {1.0};
      c.state0 = packet;
      c.t_max = 30.0;
      c.n_points = 301;
      c.engines = {"exact", "oracle"};
      c.output_prefix = "critical_n1";
      v.push_back({"critical_n1", "single mode exactly at strength balance", c});
    }
    {
      ScenarioConfig c;
      c.sys = {1.0, std::sqrt(1.0 + 4.0 * 0.1 * 6.0 / M_PI), 1.0};  // Ω_r = 1
      c.env_m = 1.0;
      c.beta = 1.0;
      c.ohmic_gamma0 = 0.1;
      c.ohmic_Lambda = 6.0;
      c.ohmic_modes = 40;
      c.state0 = packet;
      c.t_max = 25.0;
      c.n_points = 251;
      c.engines = {"exact", "ohmic"};
      c.output_prefix = "ohmic_fdt";
      v.push_back({"ohmic_fdt",
                   "discretized Ohmic bath relaxing toward the fluctuation-dissipation width",
                   c});
    }
    return v;
  }();
  return reg;
}

inline const Preset* find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

// ----------------------------------------------------------------------------
// trajectory engines
// ----------------------------------------------------------------------------

namespace detail {

inline std::vector<double> time_grid(const ScenarioConfig& cfg) {
  std::vector<double> grid(cfg.n_points);
  for (int i = 0; i < cfg.n_points; ++i)
    grid[i] = cfg.t_max * static_cast<double>(i) / (cfg.n_points - 1);
  return grid;
}

// one-ulp nudge used for rows that land on a caustic
inline double nudge(double t) { return std::nextafter(t, std::numeric_limits<double>::max()); }

inline Trajectory run_exact(const ScenarioConfig& cfg, const EnvironmentSpec& env) {
  const ModalDecomposition md = modal_decompose(cfg.sys, env);
  Trajectory tr;
  tr.regime = md.regime;
  for (double t : time_grid(cfg)) {
    const bool caustic = t > 0.0 && caustic_at(md, t);
    const double te = caustic ? nudge(t) : t;
    const GaussianState st = assemble_covariance_exact(md, cfg.sys, env, cfg.state0, te);
    tr.times.push_back(t);
    tr.states.push_back(st);
    tr.dc.push_back(decoherence_measure(st));
    tr.zvals.push_back(z_exact(md, te));
    tr.diagnostics.push_back({std::abs(residual_at(md, cfg.sys, env, te)), caustic});
  }
  tr.check_consistent();
  return tr;
}

inline Trajectory run_markovian(const ScenarioConfig& cfg, const EnvironmentSpec& env) {
  const std::vector<double> grid = time_grid(cfg);

  const MarkovianSolution sol = solve_markovian(cfg.sys, env, cfg.t_max);

  // the substep guard of the plain sequence interface applies here too
  {
    const ModalDecomposition md = isolate_roots(cfg.sys, env);
    double nu_max = md.nus.empty() ? cfg.sys.Omega : md.nus.back();
    nu_max = std::max(nu_max, md.mu0);
    if (sol.h * nu_max > MarkovianOptions{}.coarse_limit)
      throw StepTooCoarse("markovian engine: integration step too coarse for the fastest mode");
  }
  MarkovianOptions half;
  half.substep_scale = 0.5 * MarkovianOptions{}.substep_scale;
  const MarkovianSolution sol_half = solve_markovian(cfg.sys, env, cfg.t_max, half);

  // prefix maxima of |z| on the internal nodes drive the caustic flag
  std::vector<double> zmax(sol.z.size());
  double running = 0.0;
  for (std::size_t i = 0; i < sol.z.size(); ++i) {
    running = std::max(running, std::abs(sol.z[i]));
    zmax[i] = running;
  }

  Trajectory tr;
  tr.regime = classify_regime(cfg.sys, env);
  for (double t : grid) {
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(t / sol.h), sol.z.size() - 1);
    const bool caustic = t > 0.0 && std::abs(sol.eval(t).z) < kCausticTol * zmax[idx];
    const double te = caustic ? nudge(t) : t;
    const GaussianState st = assemble_covariance_markovian(sol, cfg.state0, te);
    tr.times.push_back(t);
    tr.states.push_back(st);
    tr.dc.push_back(decoherence_measure(st));
    tr.zvals.push_back(sol.eval(te));
    tr.diagnostics.push_back({std::abs(sol.eval(te).z - sol_half.eval(te).z), caustic});
  }
  tr.check_consistent();
  return tr;
}

inline Trajectory run_oracle(const ScenarioConfig& cfg, const EnvironmentSpec& env) {
  const FullFlowGenerator gen = build_full_flow(cfg.sys, env);
  const std::vector<double> grid = time_grid(cfg);
  const double dt = grid[1] - grid[0];
  const Eigen::MatrixXd step = flow_exponential(gen, dt);
  const Eigen::MatrixXd cov0 = oracle_initial_covariance(cfg.sys, env, cfg.state0);
  Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(gen.dim());
  mean0(gen.x_index()) = cfg.state0.Xc;
  mean0(gen.p_index()) = cfg.state0.Pc;

  const std::size_t d = gen.dim() / 2;
  Eigen::MatrixXd j_form = Eigen::MatrixXd::Zero(gen.dim(), gen.dim());
  j_form.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
  j_form.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);

  Trajectory tr;
  tr.regime = classify_regime(cfg.sys, env);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(gen.dim(), gen.dim());
  double zmax = 0.0;
  for (double t : grid) {
    const GaussianState st = oracle_reduce(gen, s, cov0, mean0);
    const double z = s(gen.x_index(), gen.p_index()) * cfg.sys.M;
    zmax = std::max(zmax, std::abs(z));
    const bool caustic = t > 0.0 && std::abs(z) < kCausticTol * zmax;

    // symplectic defect, made scale-free for growing flows
    const double defect = (s.transpose() * j_form * s - j_form).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());

    tr.times.push_back(t);
    tr.states.push_back(st);
    tr.dc.push_back(decoherence_measure(st));
    tr.zvals.push_back({z, s(gen.x_index(), gen.x_index()), 0.0});
    tr.diagnostics.push_back({defect / (scale * scale), caustic});
    s = step * s;
  }
  tr.check_consistent();
  return tr;
}

inline Trajectory run_ohmic(const ScenarioConfig& cfg) {
  const OhmicParams p = ohmic_from_trap(cfg.sys, *cfg.ohmic_gamma0, *cfg.ohmic_Lambda);
  const double nanv = std::numeric_limits<double>::quiet_NaN();

  Trajectory tr;
  tr.regime.label = Regime::Bounded;
  tr.regime.ratio = 4.0 * p.gamma0 * p.Lambda / (M_PI * cfg.sys.Omega * cfg.sys.Omega);
  double zmax = 0.0;
  for (double t : detail::time_grid(cfg)) {
    const ZEval ze = ohmic_z(p, t);
    const ZEval ye = ohmic_y(p, t);
    zmax = std::max(zmax, std::abs(ze.z));
    const bool caustic = t > 0.0 && std::abs(ze.z) < kCausticTol * zmax;

    GaussianState st;
    st.Xc = cfg.state0.Xc * ye.z + cfg.state0.Pc * ze.z / cfg.sys.M;
    st.Pc = cfg.state0.Xc * cfg.sys.M * ye.zdot + cfg.state0.Pc * ze.zdot;
    st.dX2 = st.dP2 = st.dXP = nanv;  // no closed-form moments in the continuum module

    // residual of the damped equation from independently differentiated pieces
    const double wt = p.omega_tilde();
    const double damp = std::exp(-p.gamma0 * t);
    const double zdd_direct =
        damp * (-wt * std::sin(wt * t) - 2.0 * p.gamma0 * std::cos(wt * t) +
                p.gamma0 * p.gamma0 * std::sin(wt * t) / wt);
    const double resid = zdd_direct + 2.0 * p.gamma0 * ze.zdot + p.Omega_r2 * ze.z;

    tr.times.push_back(t);
    tr.states.push_back(st);
    tr.dc.push_back(nanv);
    tr.zvals.push_back(ze);
    tr.diagnostics.push_back({std::abs(resid), caustic});
  }
  tr.check_consistent();
  return tr;
}

}  // namespace detail

inline Trajectory run_engine(const ScenarioConfig& cfg, const std::string& engine) {
  if (engine == "ohmic") return detail::run_ohmic(cfg);
  const EnvironmentSpec env = build_environment(cfg);
  if (engine == "exact") return detail::run_exact(cfg, env);
  if (engine == "markovian") return detail::run_markovian(cfg, env);
  if (engine == "oracle") return detail::run_oracle(cfg, env);
  throw std::invalid_argument("run_engine: unknown engine '" + engine + "'");
}

// ----------------------------------------------------------------------------
// CSV emission: fixed header, 12 significant digits, byte-stable
// ----------------------------------------------------------------------------

inline const char* kCsvHeader = "time,dX2,dP2,dXP,Dc,Xc,Pc,Z,Zdot,residual,caustic_flag";

inline std::string trajectory_csv(const Trajectory& tr) {
  std::string out = kCsvHeader;
  out += "\n";
  char buf[64];
  const auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof(buf), "%.12g%c", x, sep);
    out += buf;
  };
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const GaussianState& st = tr.states[i];
    put(tr.times[i], ',');
    put(st.dX2, ',');
    put(st.dP2, ',');
    put(st.dXP, ',');
    put(tr.dc[i], ',');
    put(st.Xc, ',');
    put(st.Pc, ',');
    put(tr.zvals[i].z, ',');
    put(tr.zvals[i].zdot, ',');
    put(tr.diagnostics[i].residual, ',');
    out += tr.diagnostics[i].caustic ? '1' : '0';
    out += '\n';
  }
  return out;
}

struct RunOutput {
  std::string engine;
  std::string path;
};

inline std::vector<RunOutput> run_scenario(const ScenarioConfig& cfg,
                                           const std::string& out_dir, int threads = 1,
                                           bool gnuplot_stub = false) {
  {
    const auto bad = validate_config(cfg);
    if (!bad.empty()) {
      std::string msg = "invalid scenario config:";
      for (const auto& b : bad) msg += "\n  " + b;
      throw ConfigError(msg);
    }
  }
  const std::string dir = out_dir.empty() ? "." : out_dir;

  std::vector<RunOutput> outs(cfg.engines.size());
  std::vector<std::string> errors(cfg.engines.size());
  const auto work = [&](std::size_t i) {
    try {
      const Trajectory tr = run_engine(cfg, cfg.engines[i]);
      const std::string path = dir + "/" + cfg.output_prefix + "_" + cfg.engines[i] + ".csv";
      std::ofstream f(path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open output file: " + path);
      f << trajectory_csv(tr);
      outs[i] = {cfg.engines[i], path};
    } catch (const std::exception& e) {
      errors[i] = std::string(e.what());
    }
  };

  if (threads > 1 && cfg.engines.size() > 1) {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < cfg.engines.size(); ++i) pool.emplace_back(work, i);
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t i = 0; i < cfg.engines.size(); ++i) work(i);
  }

  for (std::size_t i = 0; i < cfg.engines.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error("engine '" + cfg.engines[i] + "' failed: " + errors[i]);

  if (gnuplot_stub) {
    const std::string path = dir + "/" + cfg.output_prefix + ".gp";
    std::ofstream f(path, std::ios::binary);
    f << "# gnuplot stub for scenario '" << cfg.output_prefix << "'\n";
    f << "set datafile separator ','\n";
    f << "set key autotitle columnhead\n";
    f << "set xlabel 'time'\n";
    for (const auto& o : outs)
      f << "plot '" << cfg.output_prefix + "_" + o.engine + ".csv"
        << "' using 1:2 with lines title '" << o.engine << " dX2'\npause -1\n";
  }
  return outs;
}

}  // namespace fewmode
