#pragma once

// Boundary-time operator algebra on [0, 2T]: time reversal R, the
// triangular filter J, the H^1 smoothing filter Q, mask restriction P,
// discrete time derivative D and its lattice adjoint, and the connecting
// operator K in two lattice realizations:
//
//  * connecting_K: the quadrature composition R Lam R J - J Lam.  Its
//    Blagovestchenskii defect is O(dt^2 + solver consistency); used for
//    diagnostics and identity checks.
//  * connecting_K_exact: a cone-sum realization of the same operator that
//    satisfies the discrete Blagovestchenskii identity to round-off and is
//    exactly symmetric and positive semi-definite against the trapezoid
//    pairing.  Used inside the control iteration, where exact symmetry of
//    the block operator is required.  Both cost 2 oracle applications.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bcm/oracle.hpp"
#include "bcm/signal.hpp"

namespace bcm {

inline BoundarySignal time_reverse(const BoundarySignal& f) {
  BoundarySignal out = f.like_zero();
  const int nt = f.nt();
  for (int b = 0; b < f.nb(); ++b)
    for (int k = 0; k < nt; ++k) out.at(b, k) = f.at(b, nt - 1 - k);
  return out;
}

// (J f)(t) = 1/2 int_t^{2T-t} f(s) ds for t < T, 0 for t >= T.
inline BoundarySignal filter_J(const BoundarySignal& f) {
  BoundarySignal out = f.like_zero();
  const int nt = f.nt();
  const double dt = f.dt();
  std::vector<double> cum(nt);
  for (int b = 0; b < f.nb(); ++b) {
    cum[0] = 0.0;
    for (int k = 1; k < nt; ++k)
      cum[k] = cum[k - 1] + 0.5 * dt * (f.at(b, k - 1) + f.at(b, k));
    for (int k = 0; k < nt; ++k) {
      const int j = nt - 1 - k;
      out.at(b, k) = j > k ? 0.5 * (cum[j] - cum[k]) : 0.0;
    }
  }
  return out;
}

struct BoundaryTimeMask {
  std::vector<std::uint8_t> on;  // nb * nt lattice, row-major like BoundarySignal
  int nb = 0, nt = 0;
  std::uint8_t& at(int b, int k) { return on[static_cast<std::size_t>(b) * nt + k]; }
  std::uint8_t at(int b, int k) const { return on[static_cast<std::size_t>(b) * nt + k]; }
};

inline BoundaryTimeMask full_btmask(const BoundarySignal& proto) {
  BoundaryTimeMask m;
  m.nb = proto.nb(); m.nt = proto.nt();
  m.on.assign(static_cast<std::size_t>(m.nb) * m.nt, 1);
  return m;
}
inline BoundaryTimeMask empty_btmask(const BoundarySignal& proto) {
  BoundaryTimeMask m = full_btmask(proto);
  std::fill(m.on.begin(), m.on.end(), 0);
  return m;
}

// Rectangle Gamma x (T - s, T): open time interval, bset indexes bnodes.
inline void mask_add_rect(BoundaryTimeMask& m, const std::vector<int>& bset,
                          double T, double s, double dt) {
  for (int b : bset)
    for (int k = 0; k < m.nt; ++k) {
      const double t = k * dt;
      if (t > T - s && t < T) m.at(b, k) = 1;
    }
}

inline BoundarySignal restrict_P(const BoundaryTimeMask& m, const BoundarySignal& f) {
  if (m.nb != f.nb() || m.nt != f.nt()) throw std::invalid_argument("mask lattice mismatch");
  BoundarySignal out = f;
  for (std::size_t i = 0; i < out.data().size(); ++i)
    if (!m.on[i]) out.data()[i] = 0.0;
  return out;
}

// Discrete d/dt: centered interior, second-order one-sided at the ends.
inline BoundarySignal time_derivative(const BoundarySignal& f) {
  BoundarySignal out = f.like_zero();
  const int nt = f.nt();
  const double dt = f.dt();
  for (int b = 0; b < f.nb(); ++b) {
    out.at(b, 0) = (-1.5 * f.at(b, 0) + 2.0 * f.at(b, 1) - 0.5 * f.at(b, 2)) / dt;
    for (int k = 1; k < nt - 1; ++k)
      out.at(b, k) = (f.at(b, k + 1) - f.at(b, k - 1)) / (2.0 * dt);
    out.at(b, nt - 1) =
        (1.5 * f.at(b, nt - 1) - 2.0 * f.at(b, nt - 2) + 0.5 * f.at(b, nt - 3)) / dt;
  }
  return out;
}

// Trapezoid time weights (the w in <f,h> = sum f h w dS dt).
inline std::vector<double> trapezoid_weights(int nt) {
  std::vector<double> w(nt, 1.0);
  w[0] = w[nt - 1] = 0.5;
  return w;
}

// Exact lattice adjoint of time_derivative w.r.t. the trapezoid pairing:
// D* = W^{-1} D^T W applied per boundary node.
inline BoundarySignal adjoint_time_derivative(const BoundarySignal& f) {
  BoundarySignal out = f.like_zero();
  const int nt = f.nt();
  const double dt = f.dt();
  const auto w = trapezoid_weights(nt);
  for (int b = 0; b < f.nb(); ++b) {
    // accumulate D^T (W f), then divide by W
    std::vector<double> wf(nt), acc(nt, 0.0);
    for (int k = 0; k < nt; ++k) wf[k] = w[k] * f.at(b, k);
    acc[0] += -1.5 / dt * wf[0];
    acc[1] += 2.0 / dt * wf[0];
    acc[2] += -0.5 / dt * wf[0];
    for (int k = 1; k < nt - 1; ++k) {
      acc[k - 1] += -0.5 / dt * wf[k];
      acc[k + 1] += 0.5 / dt * wf[k];
    }
    acc[nt - 1] += 1.5 / dt * wf[nt - 1];
    acc[nt - 2] += -2.0 / dt * wf[nt - 1];
    acc[nt - 3] += 0.5 / dt * wf[nt - 1];
    for (int k = 0; k < nt; ++k) out.at(b, k) = acc[k] / w[k];
  }
  return out;
}

// --- Q filter: (1 - d_t^2)^{-1} with Neumann time ends ---------------------

// Tridiagonal backend: (I - D2) x = a with mirrored-ghost second difference.
inline BoundarySignal filter_Q(const BoundarySignal& a) {
  const int nt = a.nt();
  const double r = 1.0 / (a.dt() * a.dt());
  // rows: [1+2r, -2r] at ends (mirrored ghost), [-r, 1+2r, -r] interior
  std::vector<double> diag(nt, 1.0 + 2.0 * r), sub(nt, -r), sup(nt, -r);
  sup[0] = -2.0 * r;
  sub[nt - 1] = -2.0 * r;
  BoundarySignal out = a.like_zero();
  std::vector<double> cp(nt), dp(nt);
  for (int b = 0; b < a.nb(); ++b) {
    cp[0] = sup[0] / diag[0];
    dp[0] = a.at(b, 0) / diag[0];
    for (int k = 1; k < nt; ++k) {
      const double m = diag[k] - sub[k] * cp[k - 1];
      cp[k] = sup[k] / m;
      dp[k] = (a.at(b, k) - sub[k] * dp[k - 1]) / m;
    }
    out.at(b, nt - 1) = dp[nt - 1];
    for (int k = nt - 2; k >= 0; --k) out.at(b, k) = dp[k] - cp[k] * out.at(b, k + 1);
  }
  return out;
}

// Kernel backend: Green's function of (1 - d_t^2) with Neumann ends,
// g(t,s) = cosh(min) cosh(2T - max) / sinh(2T); retained as a cross-check.
inline BoundarySignal filter_Q_kernel(const BoundarySignal& a) {
  const int nt = a.nt();
  const double dt = a.dt(), L = a.t_final();
  const auto w = trapezoid_weights(nt);
  BoundarySignal out = a.like_zero();
  for (int b = 0; b < a.nb(); ++b)
    for (int k = 0; k < nt; ++k) {
      const double t = k * dt;
      double s = 0.0;
      for (int j = 0; j < nt; ++j) {
        const double u = j * dt;
        const double lo = std::min(t, u), hi = std::max(t, u);
        s += std::cosh(lo) * std::cosh(L - hi) / std::sinh(L) * a.at(b, j) * w[j] * dt;
      }
      out.at(b, k) = s;
    }
  return out;
}

// --- connecting operator K -------------------------------------------------

// Quadrature composition K = R Lam R J - J Lam (2 oracle applications).
inline BoundarySignal connecting_K(MeasurementOracle& oracle, const BoundarySignal& f) {
  const BoundarySignal lam_f = oracle.apply(f);
  const BoundarySignal lam_rjf = oracle.apply(time_reverse(filter_J(f)));
  return time_reverse(lam_rjf) - filter_J(lam_f);
}

// Cone-sum realization.  The pair correlation w(n,m) = <u^f(t_n), u^h(t_m)>_dV
// obeys an exact lattice wave equation in (n,m) driven by
// F(p,q) = <f_p, (Lam h)_q>_dS - <(Lam f)_p, h_q>_dS, so w at (T,T) is the
// exact cone sum of F over {p <= sigma(q), p = sigma(q) mod 2},
// sigma(q) = M-1-|M-q|.  Rearranged as an operator on f this is
// K = W^{-1} dt (Jc Lam - R Lam R Jc) with the cone accumulation Jc below
// and W the trapezoid time weights: the cone sums carry unit weight at every
// sample, so the end samples (where the R Lam R Jc branch is nonzero) must be
// compensated for the 1/2 that <.,.>_boundary assigns them.
inline BoundarySignal cone_accumulate(const BoundarySignal& y) {
  BoundarySignal out = y.like_zero();
  const int nt = y.nt(), M = (nt - 1) / 2;
  const double dt2 = y.dt() * y.dt();
  for (int b = 0; b < y.nb(); ++b) {
    // prefix sums over even and odd p
    double even = 0.0, odd = 0.0;
    std::vector<double> pre(nt + 1, 0.0);  // pre[s] = sum_{p<=s-1, p=(s-1) mod 2}
    std::vector<double> alt(nt, 0.0);
    for (int p = 0; p < nt; ++p) {
      if (p % 2 == 0) even += y.at(b, p); else odd += y.at(b, p);
      alt[p] = (p % 2 == 0) ? even : odd;
    }
    for (int q = 0; q < nt; ++q) {
      const int sig = M - 1 - std::abs(M - q);
      out.at(b, q) = sig >= 0 ? dt2 * alt[sig] : 0.0;
    }
  }
  return out;
}

inline BoundarySignal connecting_K_exact(MeasurementOracle& oracle, const BoundarySignal& f) {
  const BoundarySignal t1 = cone_accumulate(oracle.apply(f));
  const BoundarySignal t2 = time_reverse(oracle.apply(time_reverse(cone_accumulate(f))));
  BoundarySignal out = t1 - t2;
  out *= 1.0 / f.dt();
  for (int b = 0; b < out.nb(); ++b) {
    out.at(b, 0) *= 2.0;
    out.at(b, out.nt() - 1) *= 2.0;
  }
  return out;
}

}  // namespace bcm
