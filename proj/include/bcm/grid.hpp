#pragma once

// Discretized geometry: interval / rectangle grids with metric weights,
// travel-time fields, domains of influence, lens sets and the focusing
// constant.  The metric is isotropic, g_jk = c^{-2} delta_jk, so
// |g|^{1/2} = c^{-m} and dV = mu c^{-m} dx.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcm {

using FieldFn = std::function<double(double, double)>;

struct MediumSpec {
  int m = 1;                       // dimension, 1 or 2
  double lx = 1.0, ly = 1.0;       // side lengths (ly ignored for m=1)
  int nx = 0, ny = 1;              // node counts per axis (ny ignored for m=1)
  FieldFn c;                       // wave speed > 0
  FieldFn mu;                      // density weight > 0
  FieldFn q;                       // potential

  static MediumSpec interval(double length, int n, FieldFn c, FieldFn mu, FieldFn q) {
    MediumSpec s;
    s.m = 1; s.lx = length; s.nx = n;
    s.c = std::move(c); s.mu = std::move(mu); s.q = std::move(q);
    return s;
  }
  static MediumSpec rectangle(double lx, double ly, int nx, int ny,
                              FieldFn c, FieldFn mu, FieldFn q) {
    MediumSpec s;
    s.m = 2; s.lx = lx; s.ly = ly; s.nx = nx; s.ny = ny;
    s.c = std::move(c); s.mu = std::move(mu); s.q = std::move(q);
    return s;
  }
};

// Indicator over grid nodes.
struct SpaceMask {
  std::vector<std::uint8_t> on;
  bool empty() const {
    for (auto v : on) if (v) return false;
    return true;
  }
};

struct TravelTimeField {
  std::vector<double> d;  // time units, per node
};

class Grid {
 public:
  int m = 1;
  int nx = 0, ny = 1;
  double hx = 0.0, hy = 0.0;
  double lx = 1.0, ly = 1.0;
  std::vector<double> x, y;     // per-node coordinates
  std::vector<double> c, mu, q; // coefficient fields at nodes
  std::vector<double> dV;      // volume weights (mu c^-m, trapezoid cells)
  std::vector<int> bnodes;     // boundary node indices, deterministic order
  std::vector<double> dS;      // boundary weights, same order as bnodes

  int n_nodes() const { return nx * ny; }
  int n_boundary() const { return static_cast<int>(bnodes.size()); }
  int node(int i, int j) const { return i * ny + j; }
  bool is_boundary(int i, int j) const {
    return i == 0 || i == nx - 1 || (m == 2 && (j == 0 || j == ny - 1));
  }
  double cmax() const {
    double v = 0.0;
    for (double ci : c) v = std::max(v, ci);
    return v;
  }
  double cmin() const {
    double v = std::numeric_limits<double>::infinity();
    for (double ci : c) v = std::min(v, ci);
    return v;
  }
  double hmin() const { return m == 1 ? hx : std::min(hx, hy); }
};

inline Grid build_grid(const MediumSpec& spec) {
  if (spec.m != 1 && spec.m != 2) throw std::invalid_argument("dimension must be 1 or 2");
  if (spec.nx < 3 || (spec.m == 2 && spec.ny < 3))
    throw std::invalid_argument("need at least 3 nodes per axis");
  Grid g;
  g.m = spec.m;
  g.nx = spec.nx;
  g.ny = spec.m == 2 ? spec.ny : 1;
  g.lx = spec.lx;
  g.ly = spec.m == 2 ? spec.ly : 0.0;
  g.hx = spec.lx / (spec.nx - 1);
  g.hy = spec.m == 2 ? spec.ly / (spec.ny - 1) : 0.0;

  const int n = g.nx * g.ny;
  g.x.resize(n); g.y.resize(n);
  g.c.resize(n); g.mu.resize(n); g.q.resize(n);
  g.dV.resize(n);
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      const int k = g.node(i, j);
      g.x[k] = i * g.hx;
      g.y[k] = g.m == 2 ? j * g.hy : 0.0;
      g.c[k] = spec.c(g.x[k], g.y[k]);
      g.mu[k] = spec.mu ? spec.mu(g.x[k], g.y[k]) : 1.0;
      g.q[k] = spec.q ? spec.q(g.x[k], g.y[k]) : 0.0;
      if (!(g.c[k] > 0.0))
        throw std::invalid_argument("non-positive wave speed at node " + std::to_string(k));
      if (!(g.mu[k] > 0.0))
        throw std::invalid_argument("non-positive density weight at node " + std::to_string(k));
      if (!std::isfinite(g.q[k]))
        throw std::invalid_argument("non-finite potential at node " + std::to_string(k));
      const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
      const double wy = (g.m == 2 && (j == 0 || j == g.ny - 1)) ? 0.5 : 1.0;
      const double cell = g.m == 1 ? wx * g.hx : wx * wy * g.hx * g.hy;
      g.dV[k] = g.mu[k] * std::pow(g.c[k], -g.m) * cell;
    }
  }

  // Boundary enumeration.  m=1: {left, right}, weight 1 each (counting
  // measure at the endpoints).  m=2: perimeter walk starting at (0,0),
  // counter-clockwise; weight = half the adjacent perimeter edge lengths.
  if (g.m == 1) {
    g.bnodes = {g.node(0, 0), g.node(g.nx - 1, 0)};
    g.dS = {1.0, 1.0};
  } else {
    auto push = [&](int i, int j) { g.bnodes.push_back(g.node(i, j)); };
    for (int i = 0; i < g.nx; ++i) push(i, 0);
    for (int j = 1; j < g.ny; ++j) push(g.nx - 1, j);
    for (int i = g.nx - 2; i >= 0; --i) push(i, g.ny - 1);
    for (int j = g.ny - 2; j >= 1; --j) push(0, j);
    g.dS.resize(g.bnodes.size());
    for (std::size_t k = 0; k < g.bnodes.size(); ++k) {
      const int id = g.bnodes[k];
      const int i = id / g.ny, j = id % g.ny;
      double w = 0.0;
      if (j == 0 || j == g.ny - 1) w += g.hx * ((i == 0 || i == g.nx - 1) ? 0.5 : 1.0);
      if (i == 0 || i == g.nx - 1) w += g.hy * ((j == 0 || j == g.ny - 1) ? 0.5 : 1.0);
      g.dS[k] = w;
    }
  }
  return g;
}

inline double volume(const Grid& g, const SpaceMask& mask) {
  double v = 0.0;
  for (int k = 0; k < g.n_nodes(); ++k)
    if (mask.on[k]) v += g.dV[k];
  return v;
}

inline SpaceMask full_mask(const Grid& g) {
  return SpaceMask{std::vector<std::uint8_t>(g.n_nodes(), 1)};
}
inline SpaceMask empty_mask(const Grid& g) {
  return SpaceMask{std::vector<std::uint8_t>(g.n_nodes(), 0)};
}

// First-arrival travel time from a source set.  m=1: cumulative trapezoid
// of 1/c away from each source node.  m=2: first-order fast marching.
inline TravelTimeField travel_time(const Grid& g, const SpaceMask& source) {
  if (source.empty()) throw std::invalid_argument("travel_time: empty source");
  const int n = g.n_nodes();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());

  if (g.m == 1) {
    for (int k = 0; k < n; ++k)
      if (source.on[k]) d[k] = 0.0;
    // sweep right then left; slowness integrated by trapezoid
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 1; i < n; ++i) {
        const double step = 0.5 * g.hx * (1.0 / g.c[i - 1] + 1.0 / g.c[i]);
        d[i] = std::min(d[i], d[i - 1] + step);
      }
      for (int i = n - 2; i >= 0; --i) {
        const double step = 0.5 * g.hx * (1.0 / g.c[i] + 1.0 / g.c[i + 1]);
        d[i] = std::min(d[i], d[i + 1] + step);
      }
    }
    return TravelTimeField{std::move(d)};
  }

  // Fast marching (Dijkstra-like with eikonal update) on the 2D lattice.
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  std::vector<std::uint8_t> done(n, 0);
  for (int k = 0; k < n; ++k)
    if (source.on[k]) { d[k] = 0.0; heap.push({0.0, k}); }

  auto update = [&](int i, int j) {
    const int k = g.node(i, j);
    if (done[k]) return;
    const double inf = std::numeric_limits<double>::infinity();
    double dxm = inf, dym = inf;
    if (i > 0) dxm = std::min(dxm, d[g.node(i - 1, j)]);
    if (i < g.nx - 1) dxm = std::min(dxm, d[g.node(i + 1, j)]);
    if (j > 0) dym = std::min(dym, d[g.node(i, j - 1)]);
    if (j < g.ny - 1) dym = std::min(dym, d[g.node(i, j + 1)]);
    const double s = 1.0 / g.c[k];  // slowness
    double cand;
    const double a = std::min(dxm, dym), b = std::max(dxm, dym);
    // solve (t-dxm)^2/hx^2 + (t-dym)^2/hy^2 = s^2 when both arms usable
    if (b == std::numeric_limits<double>::infinity()) {
      cand = a + s * (dxm <= dym ? g.hx : g.hy);
    } else {
      const double ix = 1.0 / (g.hx * g.hx), iy = 1.0 / (g.hy * g.hy);
      const double A = ix + iy;
      const double B = -2.0 * (dxm * ix + dym * iy);
      const double C = dxm * dxm * ix + dym * dym * iy - s * s;
      const double disc = B * B - 4 * A * C;
      if (disc >= 0.0) {
        cand = (-B + std::sqrt(disc)) / (2 * A);
        if (cand < b) cand = b + s * std::min(g.hx, g.hy);  // causality fallback
      } else {
        cand = a + s * std::min(g.hx, g.hy);
      }
    }
    if (cand < d[k]) { d[k] = cand; heap.push({cand, k}); }
  };

  while (!heap.empty()) {
    auto [dist, k] = heap.top();
    heap.pop();
    if (done[k] || dist > d[k]) continue;
    done[k] = 1;
    const int i = k / g.ny, j = k % g.ny;
    if (i > 0) update(i - 1, j);
    if (i < g.nx - 1) update(i + 1, j);
    if (j > 0) update(i, j - 1);
    if (j < g.ny - 1) update(i, j + 1);
  }
  return TravelTimeField{std::move(d)};
}

inline SpaceMask boundary_mask(const Grid& g) {
  SpaceMask m = empty_mask(g);
  for (int b : g.bnodes) m.on[b] = 1;
  return m;
}

inline SpaceMask boundary_point_mask(const Grid& g, int bindex) {
  SpaceMask m = empty_mask(g);
  m.on[g.bnodes.at(bindex)] = 1;
  return m;
}

inline SpaceMask domain_of_influence(const Grid& g, const SpaceMask& gamma, double t) {
  if (t < 0.0) throw std::invalid_argument("domain_of_influence: negative time");
  const auto tt = travel_time(g, gamma);
  SpaceMask m = empty_mask(g);
  const double tol = 1e-12 * (1.0 + t);
  for (int k = 0; k < g.n_nodes(); ++k)
    if (tt.d[k] <= t + tol) m.on[k] = 1;
  return m;
}

inline double diameter(const Grid& g) {
  // Max over distance fields seeded at each boundary node; for intervals
  // and rectangles with the isotropic metric the diameter is attained at
  // boundary points.
  double best = 0.0;
  for (int b = 0; b < g.n_boundary(); ++b) {
    const auto tt = travel_time(g, boundary_point_mask(g, b));
    for (double v : tt.d) best = std::max(best, v);
  }
  return best;
}

struct CutTime {
  double tau = 0.0;
  bool truncated = false;  // normal ray left the grid before the criterion failed
};

// Critical time tau(z): largest t such that the inward normal ray point
// at arc time t is still at boundary distance t.
inline CutTime cut_time(const Grid& g, int bindex) {
  const auto dbnd = travel_time(g, boundary_mask(g));
  const int z = g.bnodes.at(bindex);
  const int zi = z / g.ny, zj = z % g.ny;
  int di = 0, dj = 0;  // inward normal direction
  if (zi == 0) di = 1;
  else if (zi == g.nx - 1) di = -1;
  else if (g.m == 2 && zj == 0) dj = 1;
  else if (g.m == 2 && zj == g.ny - 1) dj = -1;
  if (g.m == 2 && ((zi == 0 || zi == g.nx - 1) && (zj == 0 || zj == g.ny - 1)))
    throw std::invalid_argument("cut_time: corner node has no unique normal");

  const double tol = 2.0 * g.hmin() / g.cmin();
  double t = 0.0;
  int i = zi, j = zj;
  while (true) {
    const int i2 = i + di, j2 = j + dj;
    if (i2 < 0 || i2 >= g.nx || j2 < 0 || j2 >= g.ny)
      return {t, true};
    const double step = di != 0
        ? 0.5 * g.hx * (1.0 / g.c[g.node(i, j)] + 1.0 / g.c[g.node(i2, j2)])
        : 0.5 * g.hy * (1.0 / g.c[g.node(i, j)] + 1.0 / g.c[g.node(i2, j2)]);
    const double t2 = t + step;
    if (std::abs(dbnd.d[g.node(i2, j2)] - t2) > tol)
      return {t, false};
    t = t2;
    i = i2; j = j2;
  }
}

// J(eps) = M(z, That+eps) \ M(boundary, That-eps)
inline SpaceMask lens_set(const Grid& g, int bindex, double That, double eps) {
  if (!(eps > 0.0 && eps < That)) throw std::invalid_argument("lens_set: need 0 < eps < That");
  const auto inner = domain_of_influence(g, boundary_point_mask(g, bindex), That + eps);
  const auto outer = domain_of_influence(g, boundary_mask(g), That - eps);
  SpaceMask m = empty_mask(g);
  for (int k = 0; k < g.n_nodes(); ++k)
    m.on[k] = inner.on[k] && !outer.on[k];
  return m;
}

// Lens volume with sub-cell boundary placement.  The plain mask volume
// quantizes at whole cells, which is too coarse for the C(x^) limit on
// fine epsilon; here each node contributes the estimated covered fraction
// of its cell, based on the local travel-time slope (h/c per cell).
inline double lens_volume(const Grid& g, int bindex, double That, double eps) {
  if (!(eps > 0.0 && eps < That)) throw std::invalid_argument("lens_volume: need 0 < eps < That");
  const auto di = travel_time(g, boundary_point_mask(g, bindex));
  const auto db = travel_time(g, boundary_mask(g));
  auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
  double vol = 0.0;
  for (int k = 0; k < g.n_nodes(); ++k) {
    const double cell_t = g.hmin() / g.c[k];  // time width of one cell
    const double fin = clamp01(0.5 + (That + eps - di.d[k]) / cell_t);
    const double fout = clamp01(0.5 + (db.d[k] - (That - eps)) / cell_t);
    vol += g.dV[k] * fin * fout;
  }
  return vol;
}

struct CHatResult {
  double value = 0.0;
  double uncertainty = 0.0;
  std::vector<double> samples;  // vol(J(eps_k)) / eps_k^{(m+1)/2}
};

// Focusing constant C(x^) ~ lim vol(J(eps)) / eps^{(m+1)/2}, estimated on a
// geometric schedule with Richardson extrapolation.
inline CHatResult c_hat(const Grid& g, int bindex, double That,
                        double eps0 = 0.0, int levels = 5) {
  const auto ct = cut_time(g, bindex);
  const double tol = 2.0 * g.hmin() / g.cmin();
  if (That >= ct.tau - tol && !ct.truncated)
    throw std::invalid_argument("c_hat: non-admissible point (That >= tau(z))");
  if (eps0 <= 0.0) eps0 = 0.25 * That;
  CHatResult r;
  const double p = 0.5 * (g.m + 1);
  double eps = eps0;
  for (int k = 0; k < levels; ++k, eps *= 0.5)
    r.samples.push_back(lens_volume(g, bindex, That, eps) / std::pow(eps, p));
  // one-step Richardson on the last pair assuming first-order remainder
  const int s = static_cast<int>(r.samples.size());
  const double a = r.samples[s - 2], b = r.samples[s - 1];
  r.value = 2.0 * b - a;
  r.uncertainty = std::abs(b - a);
  return r;
}

}  // namespace bcm
