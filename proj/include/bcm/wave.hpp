#pragma once

// Self-adjoint spatial discretization of
//   A v = -(mu |g|^{1/2})^{-1} d_j (mu |g|^{1/2} g^{jk} d_k v) + q v
// in flux form (A = M^{-1} S with S symmetric, M = diag(dV)), explicit
// leapfrog stepping of u_tt + A u = 0 with Neumann flux forcing, and the
// measurement oracle exposing only the ND map.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "bcm/grid.hpp"
#include "bcm/oracle.hpp"
#include "bcm/signal.hpp"

namespace bcm {

// Stiffness in edge-list form; application is O(nodes).
class DiscreteElliptic {
 public:
  explicit DiscreteElliptic(const Grid& g) : g_(&g) {
    // Edge conductances: for the isotropic metric, mu |g|^{1/2} g^{jk}
    // reduces to mu c^{2-m} (m=1: mu c, m=2: mu).
    auto coef = [&](int k) { return g.mu[k] * std::pow(g.c[k], 2 - g.m); };
    if (g.m == 1) {
      for (int i = 0; i + 1 < g.nx; ++i) {
        const double w = 0.5 * (coef(i) + coef(i + 1)) / g.hx;
        edges_.push_back({i, i + 1, w});
      }
    } else {
      for (int i = 0; i + 1 < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
          const double w = 0.5 * (coef(g.node(i, j)) + coef(g.node(i + 1, j))) * wy * g.hy / g.hx;
          edges_.push_back({g.node(i, j), g.node(i + 1, j), w});
        }
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j + 1 < g.ny; ++j) {
          const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
          const double w = 0.5 * (coef(g.node(i, j)) + coef(g.node(i, j + 1))) * wx * g.hx / g.hy;
          edges_.push_back({g.node(i, j), g.node(i, j + 1), w});
        }
    }
    qdV_.resize(g.n_nodes());
    for (int k = 0; k < g.n_nodes(); ++k) qdV_[k] = g.q[k] * g.dV[k];

    // CSR image of the flux form (diagonal included), for the hot apply path.
    const int n = g.n_nodes();
    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (int k = 0; k < n; ++k) rows[k].push_back({k, qdV_[k]});
    for (const auto& e : edges_) {
      rows[e.a][0].second += e.w;
      rows[e.b][0].second += e.w;
      rows[e.a].push_back({e.b, -e.w});
      rows[e.b].push_back({e.a, -e.w});
    }
    ptr_.assign(n + 1, 0);
    for (int k = 0; k < n; ++k) {
      std::sort(rows[k].begin(), rows[k].end());
      ptr_[k + 1] = ptr_[k] + static_cast<int>(rows[k].size());
    }
    col_.reserve(ptr_[n]);
    val_.reserve(ptr_[n]);
    for (int k = 0; k < n; ++k)
      for (const auto& [c, w] : rows[k]) {
        col_.push_back(c);
        val_.push_back(w / g.dV[k]);
      }
  }

  // out = A v  (dV-self-adjoint by construction)
  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const int n = g_->n_nodes();
    out.resize(n);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int p = ptr_[k]; p < ptr_[k + 1]; ++p) s += val_[p] * v[col_[p]];
      out[k] = s;
    }
  }

  double quad_form(const std::vector<double>& v) const {  // <Av, v>_dV
    double s = 0.0;
    for (const auto& e : edges_) {
      const double d = v[e.a] - v[e.b];
      s += e.w * d * d;
    }
    for (std::size_t k = 0; k < qdV_.size(); ++k) s += qdV_[k] * v[k] * v[k];
    return s;
  }

  const Grid& grid() const { return *g_; }

 private:
  struct Edge { int a, b; double w; };
  const Grid* g_;
  std::vector<Edge> edges_;
  std::vector<double> qdV_;
  std::vector<int> ptr_, col_;
  std::vector<double> val_;
};

inline DiscreteElliptic assemble_operator(const Grid& g) { return DiscreteElliptic(g); }

struct InteriorState {
  std::vector<double> u;   // u(t_end)
  std::vector<double> ut;  // u_t(t_end), centered difference
};

inline double inner_dV(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (int k = 0; k < g.n_nodes(); ++k) s += a[k] * b[k] * g.dV[k];
  return s;
}
inline double norm_dV(const Grid& g, const std::vector<double>& a) {
  return std::sqrt(std::max(0.0, inner_dV(g, a, a)));
}
inline double norm_l1_dV(const Grid& g, const std::vector<double>& a) {
  double s = 0.0;
  for (int k = 0; k < g.n_nodes(); ++k) s += std::abs(a[k]) * g.dV[k];
  return s;
}

// Time axis layout shared by all signals on a grid: nt odd so that t = T
// is a sample; dt respects the CFL bound (<= cfl h / max c, cfl/sqrt(2) in 2D).
struct TimeAxis {
  int nt = 0;
  double dt = 0.0;
  static TimeAxis for_grid(const Grid& g, double T, double cfl = 0.8) {
    const double safety = g.m == 1 ? 1.0 : 1.0 / std::sqrt(2.0);
    const double dt_max = cfl * safety * g.hmin() / g.cmax();
    int steps = static_cast<int>(std::ceil(2.0 * T / dt_max * (1.0 - 1e-12)));
    if (steps % 2) ++steps;
    return {steps + 1, 2.0 * T / steps};
  }
};

class WaveSolver {
 public:
  WaveSolver(const Grid& g, const DiscreteElliptic& A, double T, double cfl = 0.8)
      : g_(&g), A_(&A), axis_(TimeAxis::for_grid(g, T, cfl)), T_(T) {
    const double safety = g.m == 1 ? 1.0 : 1.0 / std::sqrt(2.0);
    // the stability limit itself is safety * h / cmax; cfl must stay below it
    if (!(cfl > 0.0 && cfl <= 1.0) ||
        axis_.dt > safety * g.hmin() / g.cmax() * (1.0 + 1e-12))
      throw std::invalid_argument("CFL violation");
    src_w_.resize(g.n_boundary());
    for (int b = 0; b < g.n_boundary(); ++b)
      src_w_[b] = g.dS[b] / g.dV[g.bnodes[b]];
  }

  const TimeAxis& axis() const { return axis_; }
  const Grid& grid() const { return *g_; }
  double T() const { return T_; }
  BoundarySignal zero_signal() const {
    return BoundarySignal(g_->n_boundary(), axis_.nt, axis_.dt, g_->dS);
  }

  // Leapfrog from zero data with Neumann forcing f; returns the boundary
  // trace on [0,2T].  If state != nullptr also reports (u(T), u_t(T)).
  BoundarySignal run(const BoundarySignal& f, InteriorState* state = nullptr) const {
    const Grid& g = *g_;
    if (f.nb() != g.n_boundary() || f.nt() != axis_.nt)
      throw std::invalid_argument("signal lattice mismatch");
    const int n = g.n_nodes(), nt = axis_.nt, mid = (nt - 1) / 2;
    const double dt = axis_.dt;
    std::vector<double> up(n, 0.0), u(n, 0.0), au(n), unew(n);
    std::vector<double> u_prev_mid;
    BoundarySignal trace = zero_signal();
    for (int k = 0; k < nt; ++k) {
      for (int b = 0; b < g.n_boundary(); ++b) trace.at(b, k) = u[g.bnodes[b]];
      if (state) {
        if (k == mid - 1) u_prev_mid = u;
        if (k == mid) state->u = u;
        if (k == mid + 1) {
          state->ut.resize(n);
          for (int i = 0; i < n; ++i) state->ut[i] = (u[i] - u_prev_mid[i]) / (2.0 * dt);
        }
      }
      A_->apply(u, au);
      for (int i = 0; i < n; ++i) unew[i] = 2.0 * u[i] - up[i] - dt * dt * au[i];
      for (int b = 0; b < g.n_boundary(); ++b)
        unew[g.bnodes[b]] -= dt * dt * src_w_[b] * f.at(b, k);
      up.swap(u);
      u.swap(unew);
    }
    return trace;
  }

 private:
  const Grid* g_;
  const DiscreteElliptic* A_;
  TimeAxis axis_;
  double T_;
  std::vector<double> src_w_;
};

inline InteriorState solve_wave(const WaveSolver& s, const BoundarySignal& f) {
  InteriorState st;
  s.run(f, &st);
  return st;
}

// --- measurement oracle backends -------------------------------------------

class OnTheFlyOracle final : public MeasurementOracle {
 public:
  explicit OnTheFlyOracle(const WaveSolver& s) : s_(&s) {}
  const char* backend() const override { return "on_the_fly"; }
  BoundarySignal zero_signal() const override { return s_->zero_signal(); }

 private:
  BoundarySignal apply_impl(const BoundarySignal& f) override { return s_->run(f); }
  const WaveSolver* s_;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense boundary-to-boundary response, intended for m=1 sweeps.
class CachedOracle final : public MeasurementOracle {
 public:
  CachedOracle(const WaveSolver& s, std::size_t max_entries = 60ull * 1000 * 1000)
      : proto_(s.zero_signal()) {
    const std::size_t n = static_cast<std::size_t>(proto_.nb()) * proto_.nt();
    if (n * n > max_entries)
      throw BudgetError("cached oracle exceeds memory budget");
    n_ = n;
    dense_.resize(n * n);
    BoundarySignal e = proto_;
    for (std::size_t col = 0; col < n; ++col) {
      std::fill(e.data().begin(), e.data().end(), 0.0);
      e.data()[col] = 1.0;
      const BoundarySignal r = s.run(e);
      for (std::size_t row = 0; row < n; ++row) dense_[row * n + col] = r.data()[row];
    }
  }
  const char* backend() const override { return "cached"; }
  BoundarySignal zero_signal() const override { return proto_; }
  // Rows are independent; a fixed partition keeps the result deterministic.
  void set_threads(int n) { threads_ = std::max(1, n); }

 private:
  BoundarySignal apply_impl(const BoundarySignal& f) override {
    BoundarySignal out = proto_;
    const double* M = dense_.data();
    const double* x = f.data().data();
    double* y = out.data().data();
    auto rows = [&](std::size_t r0, std::size_t r1) {
      for (std::size_t r = r0; r < r1; ++r) {
        double s = 0.0;
        const double* row = M + r * n_;
        for (std::size_t c = 0; c < n_; ++c) s += row[c] * x[c];
        y[r] = s;
      }
    };
    if (threads_ <= 1) {
      rows(0, n_);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (n_ + threads_ - 1) / threads_;
      for (int t = 0; t < threads_; ++t)
        pool.emplace_back(rows, std::min(n_, t * chunk),
                          std::min(n_, (t + 1) * chunk));
      for (auto& th : pool) th.join();
    }
    return out;
  }
  BoundarySignal proto_;
  std::size_t n_ = 0;
  int threads_ = 1;
  std::vector<double> dense_;
};

enum class OracleMode { on_the_fly, cached };

inline std::unique_ptr<MeasurementOracle> build_oracle(const WaveSolver& s, OracleMode mode) {
  if (mode == OracleMode::cached) return std::make_unique<CachedOracle>(s);
  return std::make_unique<OnTheFlyOracle>(s);
}

}  // namespace bcm
