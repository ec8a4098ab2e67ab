#pragma once

// Focusing schedules: masks B(eps) and B(j,eps), focusing sources
// b = eps^{-(m+1)/2} (a(alpha,j,eps) - a(alpha,eps)), ground-truth
// comparators, and the delta-convergence report.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bcm/control.hpp"
#include "bcm/grid.hpp"
#include "bcm/signal.hpp"
#include "bcm/wave.hpp"

namespace bcm {

struct FocusSpec {
  int zhat = 0;                               // boundary index of z^
  double That = 0.0;                          // normal travel time, T^ < tau(z^)
  std::vector<double> eps_schedule;           // strictly decreasing, positive
  std::vector<std::vector<int>> gammas;       // nested boundary neighborhoods of z^
  std::vector<double> alpha_schedule;         // strictly decreasing
  BoundarySignal f;                           // probing source

  void validate() const {
    if (That <= 0.0) throw std::invalid_argument("FocusSpec: That must be positive");
    if (eps_schedule.empty() || gammas.empty() || alpha_schedule.empty())
      throw std::invalid_argument("FocusSpec: empty schedule");
    for (std::size_t k = 0; k + 1 < eps_schedule.size(); ++k)
      if (!(eps_schedule[k] > eps_schedule[k + 1]))
        throw std::invalid_argument("FocusSpec: eps schedule must be strictly decreasing");
    for (double e : eps_schedule)
      if (!(e > 0.0 && e < That)) throw std::invalid_argument("FocusSpec: need 0 < eps < That");
    if (!(That + eps_schedule.front() < f.T()))
      throw std::invalid_argument("FocusSpec: need That + max eps < T");
    for (std::size_t k = 0; k + 1 < alpha_schedule.size(); ++k)
      if (!(alpha_schedule[k] > alpha_schedule[k + 1]))
        throw std::invalid_argument("FocusSpec: alpha schedule must be strictly decreasing");
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      bool has_z = false;
      for (int b : gammas[j]) {
        has_z = has_z || b == zhat;
        if (j > 0) {
          bool in_prev = false;
          for (int p : gammas[j - 1]) in_prev = in_prev || p == b;
          if (!in_prev)
            throw std::invalid_argument("FocusSpec: Gamma_j must be nested");
        }
      }
      if (!has_z) throw std::invalid_argument("FocusSpec: every Gamma_j must contain zhat");
    }
  }
};

struct FocusRow {
  double alpha = 0.0;
  int j = 0;
  double eps = 0.0;
  std::string phi_id;
  double pairing = 0.0;    // <u^b(T), phi>_dV
  double target = 0.0;     // C(x^) u^f(T,x^) phi(x^)
  double mass_fraction = 0.0;
  double ut_norm = 0.0;
};

struct FocusReport {
  std::vector<FocusRow> rows;
  int battery_version = 1;
  double c_hat_value = 0.0;
  double c_hat_uncertainty = 0.0;
  double uf_at_xhat = 0.0;
  double xhat_x = 0.0, xhat_y = 0.0;
};

// B(eps) = dM x (T-(That-eps), T);  B(j,eps) = B(eps) u Gamma_j x (T-(That+eps), T).
inline std::pair<BoundaryTimeMask, BoundaryTimeMask> build_focus_masks(
    const Grid& g, const BoundarySignal& proto, double That, double eps,
    const std::vector<int>& gamma_j) {
  if (!(eps > 0.0 && eps < That))
    throw std::invalid_argument("build_focus_masks: need 0 < eps < That");
  const double T = proto.T();
  if (!(That + eps < T))
    throw std::invalid_argument("build_focus_masks: need That + eps < T");
  std::vector<int> all(g.n_boundary());
  for (int b = 0; b < g.n_boundary(); ++b) all[b] = b;
  BoundaryTimeMask base = empty_btmask(proto);
  mask_add_rect(base, all, T, That - eps, proto.dt());
  BoundaryTimeMask ext = base;
  mask_add_rect(ext, gamma_j, T, That + eps, proto.dt());
  return {std::move(base), std::move(ext)};
}

enum class CutoffSolver { von_neumann, direct };

inline std::pair<ControlPair, IterationReport> run_cutoff(
    MeasurementOracle& oracle, const BoundarySignal& f, const BoundaryTimeMask& mask,
    const IterationConfig& cfg, const QXSolver& qx, CutoffSolver kind) {
  if (kind == CutoffSolver::von_neumann) return iterate_cutoff(oracle, f, mask, cfg, qx);
  return solve_direct(oracle, f, mask, cfg.alpha, qx, 1e-9, cfg.max_iter, cfg.mode);
}

// b(alpha,j,eps) = eps^{-(m+1)/2} (a(alpha,j,eps) - a(alpha,eps)); both cutoff
// runs share alpha, omega, tolerances and f.
inline std::tuple<BoundarySignal, IterationReport, IterationReport> focus_iterate(
    MeasurementOracle& oracle, const Grid& g, const FocusSpec& spec, double alpha,
    int j, double eps, const QXSolver& qx, const IterationConfig& base_cfg,
    CutoffSolver kind = CutoffSolver::direct) {
  spec.validate();
  auto [mask_b, mask_j] = build_focus_masks(g, spec.f, spec.That, eps, spec.gammas.at(j));
  IterationConfig cfg = base_cfg;
  cfg.alpha = alpha;
  auto [xb, rep_b] = run_cutoff(oracle, spec.f, mask_b, cfg, qx, kind);
  if (kind == CutoffSolver::von_neumann && rep_b.omega > 0.0)
    cfg.omega_override = rep_b.omega;  // both runs must share omega
  auto [xj, rep_j] = run_cutoff(oracle, spec.f, mask_j, cfg, qx, kind);
  if (kind == CutoffSolver::von_neumann &&
      std::abs(rep_b.omega - rep_j.omega) > 1e-12 * (1.0 + std::abs(rep_b.omega)))
    throw std::runtime_error("focus_iterate: mismatched omega between cutoff runs");
  const double scale = std::pow(eps, -0.5 * (g.m + 1));
  BoundarySignal b = xj.a;
  b -= xb.a;
  b *= scale;
  return {std::move(b), std::move(rep_b), std::move(rep_j)};
}

// Energy functional F(h,a,alpha); verification only (interior access).
// The u_t(T) term is realized as u^{Da}(T) -- the same lattice convention
// the boundary-side quadratic form uses -- so the iteration's minimizer
// minimizes exactly this F.
inline double eval_functional_F(const WaveSolver& solver, const BoundarySignal& f,
                                const BoundarySignal& h, const BoundarySignal& a,
                                double alpha, const BoundaryTimeMask& mask) {
  const Grid& g = solver.grid();
  const InteriorState uf = solve_wave(solver, f);
  const InteriorState uph = solve_wave(solver, restrict_P(mask, h));
  const InteriorState ua = solve_wave(solver, a);
  const BoundarySignal da = time_derivative(a);
  const InteriorState uda = solve_wave(solver, da);
  double F = 0.0;
  std::vector<double> d(g.n_nodes());
  for (int k = 0; k < g.n_nodes(); ++k) d[k] = uf.u[k] - uph.u[k];
  F += inner_dV(g, d, d);
  for (int k = 0; k < g.n_nodes(); ++k) d[k] = uph.u[k] - ua.u[k];
  F += inner_dV(g, d, d);
  F += inner_dV(g, uda.u, uda.u);
  F += alpha * (inner_b(h, h) + inner_b(a, a) + inner_b(da, da));
  return F;
}

// (chi_N u^f(T), 0): Theorem 1 comparator, verification only.
inline InteriorState ground_truth_cutoff(const WaveSolver& solver, const BoundarySignal& f,
                                         const SpaceMask& N) {
  InteriorState s = solve_wave(solver, f);
  for (int k = 0; k < static_cast<int>(s.u.size()); ++k) {
    if (!N.on[k]) s.u[k] = 0.0;
    s.ut[k] = 0.0;
  }
  return s;
}

// Point at travel time That along the inward normal from boundary node
// bindex (x^ = gamma_{z^,nu}(T^)), by the same ray walk as cut_time,
// with linear interpolation of the final sub-step.
inline std::pair<double, double> normal_point(const Grid& g, int bindex, double That) {
  const int z = g.bnodes.at(bindex);
  const int zi = z / g.ny, zj = z % g.ny;
  int di = 0, dj = 0;
  if (zi == 0) di = 1;
  else if (zi == g.nx - 1) di = -1;
  else if (g.m == 2 && zj == 0) dj = 1;
  else if (g.m == 2 && zj == g.ny - 1) dj = -1;
  if (g.m == 2 && ((zi == 0 || zi == g.nx - 1) && (zj == 0 || zj == g.ny - 1)))
    throw std::invalid_argument("normal_point: corner node has no unique normal");
  double t = 0.0;
  int i = zi, j = zj;
  while (true) {
    const int i2 = i + di, j2 = j + dj;
    if (i2 < 0 || i2 >= g.nx || j2 < 0 || j2 >= g.ny)
      throw std::invalid_argument("normal_point: ray leaves the grid before That");
    const double h = di != 0 ? g.hx : g.hy;
    const double step = 0.5 * h * (1.0 / g.c[g.node(i, j)] + 1.0 / g.c[g.node(i2, j2)]);
    if (t + step >= That) {
      const double frac = (That - t) / step;
      const int k = g.node(i, j);
      return {g.x[k] + frac * di * g.hx, g.y[k] + frac * dj * g.hy};
    }
    t += step;
    i = i2; j = j2;
  }
}

// Bilinear interpolation of a nodal field.
inline double interp_at(const Grid& g, const std::vector<double>& field, double px,
                        double py) {
  const double fi = std::min(std::max(px / g.hx, 0.0), static_cast<double>(g.nx - 1));
  const int i0 = std::min(static_cast<int>(fi), g.nx - 2);
  const double sx = fi - i0;
  if (g.m == 1)
    return (1 - sx) * field[g.node(i0, 0)] + sx * field[g.node(i0 + 1, 0)];
  const double fj = std::min(std::max(py / g.hy, 0.0), static_cast<double>(g.ny - 1));
  const int j0 = std::min(static_cast<int>(fj), g.ny - 2);
  const double sy = fj - j0;
  return (1 - sx) * (1 - sy) * field[g.node(i0, j0)] +
         sx * (1 - sy) * field[g.node(i0 + 1, j0)] +
         (1 - sx) * sy * field[g.node(i0, j0 + 1)] +
         sx * sy * field[g.node(i0 + 1, j0 + 1)];
}

// Metric distance field from an interior point (travel time of the
// isotropic metric), seeded at the nearest node.
inline TravelTimeField point_distance(const Grid& g, double px, double py) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.n_nodes(); ++k) {
    const double dx = g.x[k] - px, dy = g.y[k] - py;
    const double d2 = dx * dx + dy * dy;
    if (d2 < bd) { bd = d2; best = k; }
  }
  SpaceMask seed = empty_mask(g);
  seed.on[best] = 1;
  return travel_time(g, seed);
}

struct TestFunction {
  std::string id;
  std::function<double(double, double)> phi;
};

// Fixed battery (version 1): constant, coordinates, Gaussians on x^ and at
// a 0.2 diam offset.
inline std::vector<TestFunction> test_battery(const Grid& g, double xhx, double xhy,
                                              double diam_time) {
  const double w = 0.1 * (g.m == 1 ? g.lx : std::min(g.lx, g.ly));
  const double off = 0.2 * diam_time * g.cmin();  // spatial offset of comparable scale
  std::vector<TestFunction> fns;
  fns.push_back({"const", [](double, double) { return 1.0; }});
  fns.push_back({"coord_x", [](double x, double) { return x; }});
  if (g.m == 2) fns.push_back({"coord_y", [](double, double y) { return y; }});
  auto gauss = [w](double cx, double cy) {
    return [cx, cy, w](double x, double y) {
      const double dx = x - cx, dy = y - cy;
      return std::exp(-0.5 * (dx * dx + dy * dy) / (w * w));
    };
  };
  fns.push_back({"gauss_on", gauss(xhx, xhy)});
  fns.push_back({"gauss_off", gauss(std::min(xhx + off, g.lx), xhy)});
  return fns;
}

// One solver run per b: tabulates pairings against the battery, the target
// C(x^) u^f(T,x^) phi(x^), the mass-concentration fraction at r = 3 eps,
// and |u_t^b(T)|.
inline FocusReport delta_test(const WaveSolver& solver, const std::vector<BoundarySignal>& bs,
                              const std::vector<double>& alphas, const std::vector<int>& js,
                              const std::vector<double>& epss, const FocusSpec& spec) {
  const Grid& g = solver.grid();
  FocusReport rep;
  const auto [xhx, xhy] = normal_point(g, spec.zhat, spec.That);
  rep.xhat_x = xhx;
  rep.xhat_y = xhy;
  const auto ct = cut_time(g, spec.zhat);
  const double adm_tol = 2.0 * g.hmin() / g.cmin();
  if (ct.truncated || spec.That < ct.tau - adm_tol) {
    const auto ch = c_hat(g, spec.zhat, spec.That);
    rep.c_hat_value = ch.value;
    rep.c_hat_uncertainty = ch.uncertainty;
  }  // non-admissible (That >= tau): the limit is zero, targets stay 0
  const InteriorState uf = solve_wave(solver, spec.f);
  rep.uf_at_xhat = interp_at(g, uf.u, xhx, xhy);
  const auto dist = point_distance(g, xhx, xhy);
  const auto battery = test_battery(g, xhx, xhy, diameter(g));

  for (std::size_t r = 0; r < bs.size(); ++r) {
    const InteriorState ub = solve_wave(solver, bs[r]);
    double total = 0.0, within = 0.0;
    const double radius = 3.0 * epss[r];
    for (int k = 0; k < g.n_nodes(); ++k) {
      const double m = std::abs(ub.u[k]) * g.dV[k];
      total += m;
      if (dist.d[k] <= radius) within += m;
    }
    const double mf = total > 0.0 ? within / total : 0.0;
    const double utn = norm_dV(g, ub.ut);
    for (const auto& fn : battery) {
      FocusRow row;
      row.alpha = alphas[r];
      row.j = js[r];
      row.eps = epss[r];
      row.phi_id = fn.id;
      double pairing = 0.0;
      for (int k = 0; k < g.n_nodes(); ++k)
        pairing += ub.u[k] * fn.phi(g.x[k], g.y[k]) * g.dV[k];
      row.pairing = pairing;
      row.target = rep.c_hat_value * rep.uf_at_xhat * fn.phi(xhx, xhy);
      row.mass_fraction = mf;
      row.ut_norm = utn;
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

}  // namespace bcm
