#pragma once

// Regularized cutoff iteration: the block operator
//   L = diag(1, P_N Q) [ 2PKP  -PK ; -KP  K + D*KD ] diag(1, P_N)
// acting on X = L^2(dM x [0,2T]) x H^1-in-time, the contraction
// S = (1 - a/w) I - (1/w) L, the von Neumann iteration, a CG cross-check,
// and the energy functional F.
//
// Lattice conventions that make L exactly symmetric and nonnegative in X:
//  * K is the cone realization (connecting_K_exact), which is symmetric
//    PSD against the trapezoid pairing to round-off;
//  * D* is the exact trapezoid adjoint of D;
//  * the diag(1,Q) smoothing uses Q_X = (I + D*D)^{-1}, whose inverse is
//    exactly the Gram matrix of the H^1-in-time inner product, so the
//    X-Gram is diag(W, W (I + D*D)) and symmetry is an algebraic identity.
// The public filter_Q (mirrored-ghost tridiagonal) approximates the same
// continuum operator but is not the exact X-Gram inverse; see the docs.

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcm/boundary_ops.hpp"
#include "bcm/oracle.hpp"
#include "bcm/signal.hpp"

namespace bcm {

struct ControlPair {
  BoundarySignal h;  // L^2 part
  BoundarySignal a;  // H^1-in-time part

  ControlPair() = default;
  ControlPair(BoundarySignal h_, BoundarySignal a_) : h(std::move(h_)), a(std::move(a_)) {
    h.check_conformable(a);
  }
  static ControlPair zero_like(const BoundarySignal& proto) {
    return ControlPair(proto.like_zero(), proto.like_zero());
  }
  ControlPair& operator+=(const ControlPair& o) { h += o.h; a += o.a; return *this; }
  ControlPair& operator-=(const ControlPair& o) { h -= o.h; a -= o.a; return *this; }
  ControlPair& operator*=(double s) { h *= s; a *= s; return *this; }
  friend ControlPair operator+(ControlPair x, const ControlPair& y) { return x += y; }
  friend ControlPair operator-(ControlPair x, const ControlPair& y) { return x -= y; }
  friend ControlPair operator*(double s, ControlPair x) { return x *= s; }
};

inline double inner_X(const ControlPair& x, const ControlPair& y) {
  return inner_b(x.h, y.h) + inner_b(x.a, y.a) +
         inner_b(time_derivative(x.a), time_derivative(y.a));
}
inline double norm_X(const ControlPair& x) { return std::sqrt(std::max(0.0, inner_X(x, x))); }

// Pentadiagonal solve for Q_X a = (I + D*D)^{-1} a, via the symmetric form
// (W + D^T W D) x = W a, banded LDL^T with bandwidth 2, factored per lattice.
class QXSolver {
 public:
  explicit QXSolver(int nt, double dt) : nt_(nt) {
    // assemble B = W + D^T W D (bands 0..2), W = trapezoid weights (no dt:
    // it cancels between the two sides)
    const auto w = trapezoid_weights(nt);
    std::vector<std::vector<double>> band(3, std::vector<double>(nt, 0.0));
    for (int k = 0; k < nt; ++k) band[0][k] = w[k];
    // rows of D: row 0: (-1.5, 2, -0.5)/dt; row k: (-0.5, 0, 0.5)/dt; last mirrored
    // add_row enumerates (p,s) in both orders; keep the upper triangle only
    auto add = [&](int i, int j, double v) {
      if (i > j) return;
      band[j - i][i] += v;
    };
    auto add_row = [&](int r, const int* cols, const double* coef, int n) {
      for (int p = 0; p < n; ++p)
        for (int s = 0; s < n; ++s)
          add(cols[p], cols[s], w[r] * coef[p] * coef[s] / (dt * dt));
    };
    {
      const int c0[3] = {0, 1, 2};
      const double v0[3] = {-1.5, 2.0, -0.5};
      add_row(0, c0, v0, 3);
      const int c1[3] = {nt - 1, nt - 2, nt - 3};
      const double v1[3] = {1.5, -2.0, 0.5};
      add_row(nt - 1, c1, v1, 3);
    }
    for (int k = 1; k < nt - 1; ++k) {
      const int c[2] = {k - 1, k + 1};
      const double v[2] = {-0.5, 0.5};
      add_row(k, c, v, 2);
    }
    // banded Cholesky (bandwidth 2)
    l_ = band;
    for (int j = 0; j < nt; ++j) {
      double d = l_[0][j];
      for (int k = std::max(0, j - 2); k < j; ++k) {
        const double v = l_[j - k][k];
        d -= v * v;
      }
      d = std::sqrt(d);
      l_[0][j] = d;
      for (int i = j + 1; i < std::min(nt, j + 3); ++i) {
        double s = l_[i - j][j];
        for (int k = std::max(0, i - 2); k < j; ++k)
          s -= l_[i - k][k] * l_[j - k][k];
        l_[i - j][j] = s / d;
      }
    }
    w_ = w;
    // Neumann-end projector data: V = ker C^T with C = [c1 c2] the end rows
    // of D; P = I - B^{-1} C S^{-1} C^T is the B-orthogonal projection onto V.
    c1_.assign(nt, 0.0);
    c2_.assign(nt, 0.0);
    c1_[0] = -1.5 / dt; c1_[1] = 2.0 / dt; c1_[2] = -0.5 / dt;
    c2_[nt - 1] = 1.5 / dt; c2_[nt - 2] = -2.0 / dt; c2_[nt - 3] = 0.5 / dt;
    u1_ = c1_; solve_B(u1_);
    u2_ = c2_; solve_B(u2_);
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (int k = 0; k < nt; ++k) {
      s11 += c1_[k] * u1_[k];
      s12 += c1_[k] * u2_[k];
      s22 += c2_[k] * u2_[k];
    }
    const double det = s11 * s22 - s12 * s12;
    si11_ = s22 / det; si12_ = -s12 / det; si22_ = s11 / det;
  }

  BoundarySignal apply(const BoundarySignal& a) const {
    if (a.nt() != nt_) throw std::invalid_argument("QXSolver lattice mismatch");
    BoundarySignal out = a.like_zero();
    std::vector<double> x(nt_);
    for (int b = 0; b < a.nb(); ++b) {
      for (int k = 0; k < nt_; ++k) x[k] = w_[k] * a.at(b, k);
      solve_B(x);
      for (int k = 0; k < nt_; ++k) out.at(b, k) = x[k];
    }
    return out;
  }

  // B-orthogonal projection onto V = {a : Da = 0 at both end samples}, the
  // lattice realization of "a in range Q" (Neumann time ends).
  BoundarySignal project(const BoundarySignal& a) const {
    if (a.nt() != nt_) throw std::invalid_argument("QXSolver lattice mismatch");
    BoundarySignal out = a;
    for (int b = 0; b < a.nb(); ++b) {
      double r1 = 0.0, r2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        r1 += c1_[k] * a.at(b, k);
        r2 += c2_[nt_ - 1 - k] * a.at(b, nt_ - 1 - k);
      }
      const double g1 = si11_ * r1 + si12_ * r2;
      const double g2 = si12_ * r1 + si22_ * r2;
      for (int k = 0; k < nt_; ++k) out.at(b, k) -= g1 * u1_[k] + g2 * u2_[k];
    }
    return out;
  }

 private:
  void solve_B(std::vector<double>& x) const {
    // forward
    for (int i = 0; i < nt_; ++i) {
      double s = x[i];
      for (int k = std::max(0, i - 2); k < i; ++k) s -= l_[i - k][k] * x[k];
      x[i] = s / l_[0][i];
    }
    // backward
    for (int i = nt_ - 1; i >= 0; --i) {
      double s = x[i];
      for (int k = i + 1; k < std::min(nt_, i + 3); ++k) s -= l_[k - i][i] * x[k];
      x[i] = s / l_[0][i];
    }
  }

  int nt_ = 0;
  std::vector<double> w_;
  std::vector<std::vector<double>> l_;  // bands 0..2 of the Cholesky factor
  std::vector<double> c1_, c2_, u1_, u2_;  // C columns and B^{-1} C
  double si11_ = 0.0, si12_ = 0.0, si22_ = 0.0;  // (C^T B^{-1} C)^{-1}
};

enum class SharingMode { naive, shared };

// (h,a) -> with a~ = P_N a (Neumann-end projection),
//   ( P[2K(Ph) - K(a~)], P_N Q_X[-K(Ph) + K(a~) + D* K(D a~)] ).
// Conjugating the a-block by P_N keeps every a-iterate in range Q (the
// paper's constraint) while G L stays exactly symmetric: G_a P_N Q_X = P_N^T W.
// Shared mode: 3 K-applications (6 oracle calls); naive mode recomputes
// per block entry, 5 K-applications (10 oracle calls), identical output.
inline ControlPair apply_L(MeasurementOracle& oracle, const BoundaryTimeMask& mask,
                           const QXSolver& qx, const ControlPair& x,
                           SharingMode mode = SharingMode::shared) {
  const BoundarySignal Ph = restrict_P(mask, x.h);
  const BoundarySignal pa = qx.project(x.a);
  BoundarySignal top = x.h.like_zero(), bottom_arg = x.h.like_zero();
  if (mode == SharingMode::shared) {
    const BoundarySignal KPh = connecting_K_exact(oracle, Ph);
    const BoundarySignal Ka = connecting_K_exact(oracle, pa);
    const BoundarySignal KDa = connecting_K_exact(oracle, time_derivative(pa));
    top = 2.0 * KPh - Ka;
    bottom_arg = Ka - KPh + adjoint_time_derivative(KDa);
  } else {
    const BoundarySignal t1 = connecting_K_exact(oracle, Ph);   // 2PKPh
    const BoundarySignal t2 = connecting_K_exact(oracle, pa);   // -PKa
    const BoundarySignal t3 = connecting_K_exact(oracle, Ph);   // -KPh
    const BoundarySignal t4 = connecting_K_exact(oracle, pa);   // +Ka
    const BoundarySignal t5 = connecting_K_exact(oracle, time_derivative(pa));
    top = 2.0 * t1 - t2;
    bottom_arg = t4 - t3 + adjoint_time_derivative(t5);
  }
  return ControlPair(restrict_P(mask, top), qx.project(qx.apply(bottom_arg)));
}

// Generic power iteration in X; the operator is injectable for tests.
inline double estimate_norm_power(const std::function<ControlPair(const ControlPair&)>& op,
                                  const BoundarySignal& proto, double tol = 1e-3,
                                  int max_iter = 100, unsigned seed = 20240915,
                                  bool* converged = nullptr) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  ControlPair x = ControlPair::zero_like(proto);
  for (double& v : x.h.data()) v = dist(rng);
  for (double& v : x.a.data()) v = dist(rng);
  double lam = 0.0;
  if (converged) *converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const double nx = norm_X(x);
    if (nx == 0.0) {
      if (converged) *converged = true;
      return 0.0;
    }
    x *= 1.0 / nx;
    ControlPair y = op(x);
    const double lam_new = inner_X(y, x);
    const bool done = std::abs(lam_new - lam) <= tol * std::abs(lam_new);
    lam = lam_new;
    x = std::move(y);
    if (done) {
      if (converged) *converged = true;
      break;
    }
  }
  return std::abs(lam);  // on non-convergence: last iterate value, flag cleared
}

inline double estimate_norm_L(MeasurementOracle& oracle, const BoundaryTimeMask& mask,
                              const QXSolver& qx, const BoundarySignal& proto,
                              SharingMode mode = SharingMode::shared) {
  const double lam = estimate_norm_power(
      [&](const ControlPair& x) { return apply_L(oracle, mask, qx, x, mode); }, proto);
  return 1.05 * lam;  // upper-biased
}

enum class OmegaRule { fixed_from_norm, reciprocal };

struct IterationConfig {
  double alpha = 1e-2;
  OmegaRule omega_rule = OmegaRule::fixed_from_norm;
  double kappa = 2.2;        // omega = kappa (1 + |L|) under fixed_from_norm
  double tol = 1e-6;         // relative X-change stopping tolerance
  int max_iter = 100000;
  SharingMode mode = SharingMode::naive;  // fidelity default; shared is the fast path
  double diam_hint = 0.0;    // if > 0, enforce T > 2 diam
  double omega_override = 0.0;  // if > 0, use this omega verbatim (paired runs)
};

struct IterationReport {
  std::vector<double> change;      // X-norm of successive differences
  double ratio = 0.0;              // empirical contraction ratio (tail median)
  double residual = 0.0;           // |(alpha+L)x - rhs|_X / |rhs|_X
  long long oracle_count = 0;
  double omega = 0.0;
  double norm_L = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
  double da_end_ratio = 0.0;       // max(|Da(0)|,|Da(2T)|) / (dt |a|) -- lattice Neumann ends
};

inline double da_end_ratio(const BoundarySignal& a) {
  const BoundarySignal da = time_derivative(a);
  double ends = 0.0;
  for (int b = 0; b < a.nb(); ++b)
    ends = std::max({ends, std::abs(da.at(b, 0)), std::abs(da.at(b, a.nt() - 1))});
  const double na = norm_b(a);
  return na > 0.0 ? ends / (a.dt() * na) : 0.0;
}

inline ControlPair rhs_pair(MeasurementOracle& oracle, const BoundaryTimeMask& mask,
                            const BoundarySignal& f) {
  return ControlPair(restrict_P(mask, connecting_K_exact(oracle, f)), f.like_zero());
}

// Von Neumann iteration x_n = x_0 + S x_{n-1}, x_0 = (1/w)(PKf, 0).
inline std::pair<ControlPair, IterationReport> iterate_cutoff(
    MeasurementOracle& oracle, const BoundarySignal& f, const BoundaryTimeMask& mask,
    const IterationConfig& cfg, const QXSolver& qx) {
  const auto t_start = std::chrono::steady_clock::now();
  if (cfg.diam_hint > 0.0 && !(f.T() > 2.0 * cfg.diam_hint))
    throw std::invalid_argument("iterate_cutoff: need T > 2 diam(M)");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("iterate_cutoff: alpha must lie in (0,1)");

  IterationReport rep;
  if (cfg.omega_override > 0.0) {
    rep.omega = cfg.omega_override;
    rep.norm_L = estimate_norm_L(oracle, mask, qx, f, cfg.mode);
  } else if (cfg.omega_rule == OmegaRule::fixed_from_norm) {
    if (!(cfg.kappa > 2.0)) throw std::invalid_argument("kappa must exceed 2");
    rep.norm_L = estimate_norm_L(oracle, mask, qx, f, cfg.mode);
    rep.omega = cfg.kappa * (1.0 + rep.norm_L);
  } else {
    rep.omega = 1.0 / cfg.alpha;
    rep.norm_L = estimate_norm_L(oracle, mask, qx, f, cfg.mode);
  }
  if (!(rep.omega > 2.0 * (1.0 + rep.norm_L)))
    throw std::invalid_argument("iterate_cutoff: omega <= 2(1+|L|)");

  oracle.reset_count();
  const double w = rep.omega, alpha = cfg.alpha;
  const ControlPair x0 = (1.0 / w) * rhs_pair(oracle, mask, f);
  ControlPair x = x0;
  ControlPair prev = ControlPair::zero_like(f);
  double prev_change = -1.0;
  for (int n = 0; n < cfg.max_iter; ++n) {
    const ControlPair Lx = apply_L(oracle, mask, qx, x, cfg.mode);
    ControlPair next = x0 + (1.0 - alpha / w) * x - (1.0 / w) * Lx;
    const double ch = norm_X(next - x);
    rep.change.push_back(ch);
    if (prev_change > 0.0 && ch > 0.0) rep.ratio = ch / prev_change;
    prev_change = ch;
    prev = x;
    x = std::move(next);
    const double nx = norm_X(x);
    if (nx > 0.0 && ch < cfg.tol * nx) { rep.converged = true; break; }
    if (nx == 0.0) { rep.converged = true; break; }  // f = 0 fixed point
  }
  // residual of the normal equation, one extra apply (not counted in the
  // measurement budget: reuse the final change, residual = w |x_{n+1}-x_n|)
  {
    const double nrhs = w * norm_X(x0);
    rep.residual = rep.change.empty() || nrhs == 0.0
                       ? 0.0
                       : w * rep.change.back() / nrhs;
  }
  rep.oracle_count = oracle.count();
  rep.da_end_ratio = da_end_ratio(x.a);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(x), std::move(rep)};
}

// CG in the X inner product on (alpha + L) x = (PKf, 0); valid because
// alpha + L is symmetric positive definite in X.
inline std::pair<ControlPair, IterationReport> solve_direct(
    MeasurementOracle& oracle, const BoundarySignal& f, const BoundaryTimeMask& mask,
    double alpha, const QXSolver& qx, double tol = 1e-9, int max_iter = 20000,
    SharingMode mode = SharingMode::shared) {
  const auto t_start = std::chrono::steady_clock::now();
  IterationReport rep;
  oracle.reset_count();
  const ControlPair rhs = rhs_pair(oracle, mask, f);
  const double nrhs = norm_X(rhs);
  ControlPair x = ControlPair::zero_like(f);
  if (nrhs == 0.0) {
    rep.converged = true;
    rep.oracle_count = oracle.count();
    return {std::move(x), std::move(rep)};
  }
  ControlPair r = rhs;
  ControlPair p = r;
  double rr = inner_X(r, r);
  for (int it = 0; it < max_iter; ++it) {
    ControlPair Ap = alpha * p + apply_L(oracle, mask, qx, p, mode);
    const double pAp = inner_X(p, Ap);
    if (pAp <= 0.0) break;  // stagnation flag: SPD assumption violated numerically
    const double a_step = rr / pAp;
    x += a_step * p;
    r -= a_step * Ap;
    const double rr2 = inner_X(r, r);
    rep.change.push_back(std::sqrt(rr2));
    if (std::sqrt(rr2) <= tol * nrhs) { rep.converged = true; break; }
    p = r + (rr2 / rr) * p;
    rr = rr2;
  }
  rep.residual = rep.change.empty() ? 0.0 : rep.change.back() / nrhs;
  rep.oracle_count = oracle.count();
  rep.da_end_ratio = da_end_ratio(x.a);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(x), std::move(rep)};
}

}  // namespace bcm
