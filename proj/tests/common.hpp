#pragma once

#include <random>

#include "bcm/config.hpp"
#include "bcm/focusing.hpp"

namespace tst {

inline bcm::MediumSpec interval_const(double c, int n, double len = 1.0) {
  return bcm::MediumSpec::interval(
      len, n, [c](double, double) { return c; }, [](double, double) { return 1.0; },
      [](double, double) { return 0.0; });
}

inline bcm::MediumSpec interval_smooth(int n) {
  return bcm::MediumSpec::interval(
      1.0, n, [](double x, double) { return 1.0 + 0.2 * std::sin(6.28318530717958648 * x); },
      [](double x, double) { return 1.0 + 0.1 * x; },
      [](double x, double) { return 0.2 * x * (1.0 - x); });
}

inline bcm::MediumSpec square_const(double c, int n) {
  return bcm::MediumSpec::rectangle(
      1.0, 1.0, n, n, [c](double, double) { return c; },
      [](double, double) { return 1.0; }, [](double, double) { return 0.0; });
}

// Smooth random boundary signal: a few Gaussian pulses per boundary node.
inline bcm::BoundarySignal random_signal(const bcm::WaveSolver& s, std::mt19937& rng,
                                         int pulses = 3) {
  bcm::BoundarySignal f = s.zero_signal();
  const double T2 = f.t_final();
  std::uniform_int_distribution<int> db(0, f.nb() - 1);
  std::uniform_real_distribution<double> dt0(0.1 * T2, 0.9 * T2);
  std::uniform_real_distribution<double> dsg(0.02 * T2, 0.06 * T2);
  std::uniform_real_distribution<double> damp(-1.0, 1.0);
  for (int p = 0; p < pulses; ++p) {
    const int b = db(rng);
    const double t0 = dt0(rng), sg = dsg(rng), am = damp(rng);
    for (int k = 0; k < f.nt(); ++k) {
      const double u = (k * f.dt() - t0) / sg;
      f.at(b, k) += am * std::exp(-0.5 * u * u);
    }
  }
  return f;
}

inline bcm::ControlPair random_pair(const bcm::WaveSolver& s, std::mt19937& rng) {
  return bcm::ControlPair(random_signal(s, rng), random_signal(s, rng));
}

struct Rig {
  bcm::Grid grid;
  bcm::DiscreteElliptic A;
  bcm::WaveSolver solver;
  bcm::QXSolver qx;
  Rig(const bcm::MediumSpec& med, double T, double cfl = 0.8)
      : grid(bcm::build_grid(med)),
        A(grid),
        solver(grid, A, T, cfl),
        qx(solver.axis().nt, solver.axis().dt) {}
};

}  // namespace tst
