#pragma once

// Experiment configuration: JSON schema with strict unknown-key rejection,
// plus construction of the grid / time axis / source signal it describes.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bcm/control.hpp"
#include "bcm/focusing.hpp"
#include "bcm/grid.hpp"
#include "bcm/signal.hpp"
#include "bcm/wave.hpp"

namespace bcm {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         const std::vector<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_req(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_opt(const json& j, const std::string& where, const std::string& key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

// Coefficient field: constant, linear ramp, or Gaussian bump over a base.
inline FieldFn parse_field(const json& j, const std::string& where) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return [v](double, double) { return v; };
  }
  require_keys(j, where, {"kind", "value", "base", "slope_x", "slope_y", "amp",
                          "cx", "cy", "width"});
  const std::string kind = get_req<std::string>(j, where, "kind");
  if (kind == "constant") {
    const double v = get_req<double>(j, where, "value");
    return [v](double, double) { return v; };
  }
  if (kind == "ramp") {
    const double b = get_req<double>(j, where, "base");
    const double sx = get_opt<double>(j, where, "slope_x", 0.0);
    const double sy = get_opt<double>(j, where, "slope_y", 0.0);
    return [b, sx, sy](double x, double y) { return b + sx * x + sy * y; };
  }
  if (kind == "bump") {
    const double b = get_req<double>(j, where, "base");
    const double a = get_req<double>(j, where, "amp");
    const double cx = get_req<double>(j, where, "cx");
    const double cy = get_opt<double>(j, where, "cy", 0.0);
    const double w = get_req<double>(j, where, "width");
    return [b, a, cx, cy, w](double x, double y) {
      const double dx = x - cx, dy = y - cy;
      return b + a * std::exp(-0.5 * (dx * dx + dy * dy) / (w * w));
    };
  }
  throw ConfigError(where + ": unknown field kind '" + kind + "'");
}

}  // namespace detail

struct PulseSpec {
  std::vector<int> bset;       // boundary indices carrying the pulse
  std::string envelope;        // "gauss" or "dgauss"
  double t0_minus_T = 0.0;     // pulse center as offset from T (t0 = T + offset)
  double sigma = 0.0;
  double amplitude = 1.0;
  double spatial_width = 0.0;  // >0: Gaussian taper around the first bset node
};

struct ExperimentConfig {
  MediumSpec medium;
  double T_factor = 0.0;       // T = T_factor * diam, exclusive with T_abs
  double T_abs = 0.0;
  double cfl = 0.8;
  std::vector<PulseSpec> pulses;
  // cutoff mask: bset x (T - mask_depth, T); empty bset = all boundary nodes
  std::vector<int> mask_bset;
  double mask_depth = 0.0;
  // focusing
  bool has_focus = false;
  int focus_zhat = 0;
  double focus_That = 0.0;
  std::vector<double> focus_eps;          // in time units
  std::vector<std::vector<int>> focus_gammas;
  // iteration
  IterationConfig iteration;
  std::vector<double> alpha_schedule;
  CutoffSolver solver = CutoffSolver::direct;
  OracleMode oracle_mode = OracleMode::cached;
  // plumbing
  std::string out_dir = ".";
  unsigned seed = 20240915;
  std::string raw;  // canonical serialized form, hashed into artifacts
};

inline std::vector<int> parse_bset(const json& j, const std::string& where, int nb) {
  std::vector<int> out;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "all") {
      for (int b = 0; b < nb; ++b) out.push_back(b);
      return out;
    }
    if (s == "left") return {0};
    if (s == "right") return {1};
    throw ConfigError(where + ": unknown boundary-set name '" + s + "'");
  }
  if (!j.is_array()) throw ConfigError(where + ": expected array or name");
  for (const auto& v : j) {
    const int b = v.get<int>();
    if (b < 0 || b >= nb) throw ConfigError(where + ": boundary index out of range");
    out.push_back(b);
  }
  return out;
}

inline ExperimentConfig parse_config(const json& root) {
  using namespace detail;
  require_keys(root, "config",
               {"medium", "time", "source", "mask", "focus", "iteration", "output",
                "seed", "oracle", "solver"});
  ExperimentConfig cfg;
  cfg.raw = root.dump();

  const json& jm = root.at("medium");
  require_keys(jm, "medium", {"dim", "lx", "ly", "nx", "ny", "c", "mu", "q"});
  const int m = get_req<int>(jm, "medium", "dim");
  FieldFn c = parse_field(jm.at("c"), "medium.c");
  FieldFn mu = jm.contains("mu") ? parse_field(jm.at("mu"), "medium.mu")
                                 : FieldFn([](double, double) { return 1.0; });
  FieldFn q = jm.contains("q") ? parse_field(jm.at("q"), "medium.q")
                               : FieldFn([](double, double) { return 0.0; });
  if (m == 1) {
    cfg.medium = MediumSpec::interval(get_opt<double>(jm, "medium", "lx", 1.0),
                                      get_req<int>(jm, "medium", "nx"), c, mu, q);
  } else if (m == 2) {
    cfg.medium = MediumSpec::rectangle(
        get_opt<double>(jm, "medium", "lx", 1.0), get_opt<double>(jm, "medium", "ly", 1.0),
        get_req<int>(jm, "medium", "nx"), get_req<int>(jm, "medium", "ny"), c, mu, q);
  } else {
    throw ConfigError("medium.dim: must be 1 or 2");
  }

  const json& jt = root.at("time");
  require_keys(jt, "time", {"T_factor", "T", "cfl"});
  cfg.T_factor = get_opt<double>(jt, "time", "T_factor", 0.0);
  cfg.T_abs = get_opt<double>(jt, "time", "T", 0.0);
  cfg.cfl = get_opt<double>(jt, "time", "cfl", 0.8);
  if ((cfg.T_factor > 0.0) == (cfg.T_abs > 0.0))
    throw ConfigError("time: exactly one of T_factor / T required");

  // The grid is needed to resolve boundary sets; build early.
  const Grid grid = build_grid(cfg.medium);
  const int nb = grid.n_boundary();

  if (!root.contains("source")) throw ConfigError("config: missing key 'source'");
  for (const auto& jp : root.at("source")) {
    require_keys(jp, "source[]",
                 {"bset", "envelope", "t0_minus_T", "sigma", "amplitude", "spatial_width"});
    PulseSpec p;
    p.bset = parse_bset(jp.at("bset"), "source[].bset", nb);
    p.envelope = get_req<std::string>(jp, "source[]", "envelope");
    if (p.envelope != "gauss" && p.envelope != "dgauss")
      throw ConfigError("source[].envelope: must be gauss or dgauss");
    p.t0_minus_T = get_req<double>(jp, "source[]", "t0_minus_T");
    p.sigma = get_req<double>(jp, "source[]", "sigma");
    p.amplitude = get_opt<double>(jp, "source[]", "amplitude", 1.0);
    p.spatial_width = get_opt<double>(jp, "source[]", "spatial_width", 0.0);
    cfg.pulses.push_back(std::move(p));
  }
  if (cfg.pulses.empty()) throw ConfigError("source: need at least one pulse");

  if (root.contains("mask")) {
    const json& jk = root.at("mask");
    require_keys(jk, "mask", {"bset", "depth_factor", "depth"});
    cfg.mask_bset = parse_bset(jk.at("bset"), "mask.bset", nb);
    const double df = get_opt<double>(jk, "mask", "depth_factor", 0.0);
    cfg.mask_depth = get_opt<double>(jk, "mask", "depth", 0.0);
    if ((df > 0.0) == (cfg.mask_depth > 0.0))
      throw ConfigError("mask: exactly one of depth_factor / depth required");
    if (df > 0.0) cfg.mask_depth = -df;  // resolved against diam at load()
  }

  if (root.contains("focus")) {
    const json& jf = root.at("focus");
    require_keys(jf, "focus", {"zhat", "That_factor", "That", "eps_factors", "gammas"});
    cfg.has_focus = true;
    cfg.focus_zhat = get_req<int>(jf, "focus", "zhat");
    if (cfg.focus_zhat < 0 || cfg.focus_zhat >= nb)
      throw ConfigError("focus.zhat: boundary index out of range");
    const double tf = get_opt<double>(jf, "focus", "That_factor", 0.0);
    cfg.focus_That = get_opt<double>(jf, "focus", "That", 0.0);
    if ((tf > 0.0) == (cfg.focus_That > 0.0))
      throw ConfigError("focus: exactly one of That_factor / That required");
    if (tf > 0.0) cfg.focus_That = -tf;
    for (const auto& v : jf.at("eps_factors")) cfg.focus_eps.push_back(v.get<double>());
    if (jf.contains("gammas"))
      for (const auto& gset : jf.at("gammas"))
        cfg.focus_gammas.push_back(parse_bset(gset, "focus.gammas[]", nb));
    else
      cfg.focus_gammas.push_back({cfg.focus_zhat});
  }

  if (root.contains("iteration")) {
    const json& ji = root.at("iteration");
    require_keys(ji, "iteration",
                 {"alpha", "omega_rule", "kappa", "tol", "max_iter", "mode"});
    if (ji.contains("alpha")) {
      if (ji.at("alpha").is_array())
        for (const auto& v : ji.at("alpha")) cfg.alpha_schedule.push_back(v.get<double>());
      else
        cfg.alpha_schedule.push_back(ji.at("alpha").get<double>());
    }
    const std::string rule = get_opt<std::string>(ji, "iteration", "omega_rule",
                                                  std::string("fixed_from_norm"));
    if (rule == "fixed_from_norm") cfg.iteration.omega_rule = OmegaRule::fixed_from_norm;
    else if (rule == "reciprocal") cfg.iteration.omega_rule = OmegaRule::reciprocal;
    else throw ConfigError("iteration.omega_rule: unknown rule '" + rule + "'");
    cfg.iteration.kappa = get_opt<double>(ji, "iteration", "kappa", 2.2);
    cfg.iteration.tol = get_opt<double>(ji, "iteration", "tol", 1e-6);
    cfg.iteration.max_iter = get_opt<int>(ji, "iteration", "max_iter", 100000);
    const std::string mode = get_opt<std::string>(ji, "iteration", "mode",
                                                  std::string("shared"));
    if (mode == "shared") cfg.iteration.mode = SharingMode::shared;
    else if (mode == "naive") cfg.iteration.mode = SharingMode::naive;
    else throw ConfigError("iteration.mode: must be shared or naive");
  }
  if (cfg.alpha_schedule.empty()) cfg.alpha_schedule = {1e-1, 1e-2, 1e-3};

  if (root.contains("solver")) {
    const std::string s = root.at("solver").get<std::string>();
    if (s == "von_neumann") cfg.solver = CutoffSolver::von_neumann;
    else if (s == "direct") cfg.solver = CutoffSolver::direct;
    else throw ConfigError("solver: must be von_neumann or direct");
  }
  if (root.contains("oracle")) {
    const std::string s = root.at("oracle").get<std::string>();
    if (s == "cached") cfg.oracle_mode = OracleMode::cached;
    else if (s == "on_the_fly") cfg.oracle_mode = OracleMode::on_the_fly;
    else throw ConfigError("oracle: must be cached or on_the_fly");
  }
  if (root.contains("output")) cfg.out_dir = root.at("output").get<std::string>();
  if (root.contains("seed")) cfg.seed = root.at("seed").get<unsigned>();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(root);
}

// Resolved experiment: grid, time axis, source signal, schedules.
struct Experiment {
  Grid grid;
  TimeAxis axis;
  double T = 0.0;
  double diam = 0.0;
  BoundarySignal f;
  BoundaryTimeMask mask;
  ExperimentConfig cfg;
};

inline BoundarySignal build_source(const Grid& g, const TimeAxis& axis,
                                   const std::vector<PulseSpec>& pulses) {
  BoundarySignal f(g.n_boundary(), axis.nt, axis.dt, g.dS);
  const double T = f.T();
  for (const auto& p : pulses) {
    const double t0 = T + p.t0_minus_T;
    const int b0 = p.bset.front();
    const double x0 = g.x[g.bnodes[b0]], y0 = g.y[g.bnodes[b0]];
    for (int b : p.bset) {
      double sw = 1.0;
      if (p.spatial_width > 0.0) {
        const double dx = g.x[g.bnodes[b]] - x0, dy = g.y[g.bnodes[b]] - y0;
        sw = std::exp(-0.5 * (dx * dx + dy * dy) / (p.spatial_width * p.spatial_width));
      }
      for (int k = 0; k < axis.nt; ++k) {
        const double u = (k * axis.dt - t0) / p.sigma;
        const double env = p.envelope == "gauss"
                               ? std::exp(-0.5 * u * u)
                               : -u * std::exp(-0.5 * u * u);
        f.at(b, k) += p.amplitude * sw * env;
      }
    }
  }
  return f;
}

inline Experiment load_experiment(const ExperimentConfig& cfg, int resolution_scale = 1) {
  Experiment ex;
  ex.cfg = cfg;
  MediumSpec med = cfg.medium;
  if (resolution_scale > 1) {
    med.nx = (med.nx - 1) * resolution_scale + 1;
    if (med.m == 2) med.ny = (med.ny - 1) * resolution_scale + 1;
  }
  ex.grid = build_grid(med);
  ex.diam = diameter(ex.grid);
  double T = cfg.T_abs > 0.0 ? cfg.T_abs : cfg.T_factor * ex.diam;
  if (!(T > 2.0 * ex.diam))
    throw ConfigError("time: need T > 2 diam(M)");
  ex.T = T;
  if (resolution_scale > 1) {
    // refine time in lockstep with space so dt scales by exactly 1/scale
    const Grid base = build_grid(cfg.medium);
    const double Tb = cfg.T_abs > 0.0 ? cfg.T_abs : cfg.T_factor * diameter(base);
    const TimeAxis ab = TimeAxis::for_grid(base, Tb, cfg.cfl);
    const int steps = (ab.nt - 1) * resolution_scale;
    ex.axis = {steps + 1, 2.0 * T / steps};
  } else {
    ex.axis = TimeAxis::for_grid(ex.grid, T, cfg.cfl);
  }
  ex.f = build_source(ex.grid, ex.axis, cfg.pulses);
  ex.mask = full_btmask(ex.f);
  if (!cfg.mask_bset.empty()) {
    const double depth =
        cfg.mask_depth > 0.0 ? cfg.mask_depth : -cfg.mask_depth * ex.diam;
    ex.mask = empty_btmask(ex.f);
    mask_add_rect(ex.mask, cfg.mask_bset, T, depth, ex.axis.dt);
  }
  ex.cfg.iteration.diam_hint = ex.diam;
  ex.cfg.focus_That =
      cfg.focus_That > 0.0 ? cfg.focus_That : -cfg.focus_That * ex.diam;
  for (double& e : ex.cfg.focus_eps) e *= ex.diam;  // eps given as diam fractions
  return ex;
}

inline FocusSpec make_focus_spec(const Experiment& ex) {
  FocusSpec fs;
  fs.zhat = ex.cfg.focus_zhat;
  fs.That = ex.cfg.focus_That;
  fs.eps_schedule = ex.cfg.focus_eps;
  fs.gammas = ex.cfg.focus_gammas;
  fs.alpha_schedule = ex.cfg.alpha_schedule;
  fs.f = ex.f;
  fs.validate();
  return fs;
}

}  // namespace bcm
