#pragma once

// BoundarySignal: values on the (boundary node) x (time sample) lattice
// over [0, 2T], with the trapezoidal dS x dt pairing, plus a bit-exact
// plain-text serialization.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcm {

class BoundarySignal {
 public:
  BoundarySignal() = default;
  BoundarySignal(int nb, int nt, double dt, std::vector<double> dS)
      : nb_(nb), nt_(nt), dt_(dt), dS_(std::move(dS)), v_(static_cast<std::size_t>(nb) * nt, 0.0) {
    if (static_cast<int>(dS_.size()) != nb) throw std::invalid_argument("dS size mismatch");
    if (nt < 2 || (nt - 1) % 2 != 0)
      throw std::invalid_argument("time axis must have an odd sample count (even step count)");
  }

  int nb() const { return nb_; }
  int nt() const { return nt_; }
  double dt() const { return dt_; }
  double t_final() const { return dt_ * (nt_ - 1); }  // = 2T
  double T() const { return 0.5 * t_final(); }
  const std::vector<double>& dS() const { return dS_; }

  double& at(int b, int k) { return v_[static_cast<std::size_t>(b) * nt_ + k]; }
  double at(int b, int k) const { return v_[static_cast<std::size_t>(b) * nt_ + k]; }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  bool conformable(const BoundarySignal& o) const {
    return nb_ == o.nb_ && nt_ == o.nt_ && dt_ == o.dt_;
  }
  void check_conformable(const BoundarySignal& o) const {
    if (!conformable(o)) throw std::invalid_argument("signals not conformable");
  }

  BoundarySignal like_zero() const {
    return BoundarySignal(nb_, nt_, dt_, dS_);
  }

  BoundarySignal& operator+=(const BoundarySignal& o) {
    check_conformable(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  BoundarySignal& operator-=(const BoundarySignal& o) {
    check_conformable(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  BoundarySignal& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }
  friend BoundarySignal operator+(BoundarySignal a, const BoundarySignal& b) { return a += b; }
  friend BoundarySignal operator-(BoundarySignal a, const BoundarySignal& b) { return a -= b; }
  friend BoundarySignal operator*(double s, BoundarySignal a) { return a *= s; }

 private:
  int nb_ = 0, nt_ = 0;
  double dt_ = 0.0;
  std::vector<double> dS_;
  std::vector<double> v_;
};

// <f,h>_boundary = sum f h dS dt, trapezoidal in time.
inline double inner_b(const BoundarySignal& f, const BoundarySignal& h) {
  f.check_conformable(h);
  double s = 0.0;
  for (int b = 0; b < f.nb(); ++b) {
    double row = 0.5 * (f.at(b, 0) * h.at(b, 0) + f.at(b, f.nt() - 1) * h.at(b, f.nt() - 1));
    for (int k = 1; k < f.nt() - 1; ++k) row += f.at(b, k) * h.at(b, k);
    s += row * f.dS()[b];
  }
  return s * f.dt();
}

inline double norm_b(const BoundarySignal& f) { return std::sqrt(std::max(0.0, inner_b(f, f))); }

// --- serialization -------------------------------------------------------
// Header line: "boundary_signal 1 <nb> <nt> <dt> <2T>", then one line of dS
// values, then nb lines of nt samples.  %.17g both ways, bit-exact.

inline void write_signal(std::ostream& os, const BoundarySignal& f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", f.dt());
  os << "boundary_signal 1 " << f.nb() << ' ' << f.nt() << ' ' << buf;
  std::snprintf(buf, sizeof buf, "%.17g", f.t_final());
  os << ' ' << buf << '\n';
  for (int b = 0; b < f.nb(); ++b) {
    std::snprintf(buf, sizeof buf, "%.17g", f.dS()[b]);
    os << (b ? " " : "") << buf;
  }
  os << '\n';
  for (int b = 0; b < f.nb(); ++b) {
    for (int k = 0; k < f.nt(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", f.at(b, k));
      os << (k ? " " : "") << buf;
    }
    os << '\n';
  }
}

inline BoundarySignal read_signal(std::istream& is) {
  std::string tag;
  int version = 0, nb = 0, nt = 0;
  double dt = 0.0, tf = 0.0;
  is >> tag >> version >> nb >> nt >> dt >> tf;
  if (tag != "boundary_signal" || version != 1 || !is)
    throw std::runtime_error("bad boundary_signal header");
  std::vector<double> dS(nb);
  for (auto& v : dS) is >> v;
  BoundarySignal f(nb, nt, dt, std::move(dS));
  for (int b = 0; b < nb; ++b)
    for (int k = 0; k < nt; ++k) is >> f.at(b, k);
  if (!is) throw std::runtime_error("truncated boundary_signal payload");
  return f;
}

inline std::string to_string(const BoundarySignal& f) {
  std::ostringstream os;
  write_signal(os, f);
  return os.str();
}

}  // namespace bcm
