// Experiment harness for the boundary-control wave toolkit.
//
// Exit codes: 0 ok, 2 config error, 3 non-convergence, 4 resource budget.

#include <algorithm>
#include <iostream>
#include <memory>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "bcm/config.hpp"
#include "bcm/focusing.hpp"
#include "bcm/io.hpp"

namespace {

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Session {
  bcm::Experiment ex;
  bcm::DiscreteElliptic A;
  bcm::WaveSolver solver;
  std::unique_ptr<bcm::MeasurementOracle> oracle;
  bcm::QXSolver qx;
  std::string hash;

  Session(const bcm::ExperimentConfig& cfg, int rscale)
      : ex(bcm::load_experiment(cfg, rscale)),
        A(ex.grid),
        solver(ex.grid, A, ex.T, cfg.cfl),
        oracle(bcm::build_oracle(solver, cfg.oracle_mode)),
        qx(ex.axis.nt, ex.axis.dt),
        hash(bcm::config_hash(cfg.raw)) {}
};

std::string out_path(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

// Random smooth boundary pulse parameters, drawn once so that the same
// continuum signal is sampled on every lattice.
struct RandomPulse {
  int bindex;
  double t0, sigma, amp;
};

std::vector<RandomPulse> draw_pulses(std::mt19937& rng, int nb, double T, int count) {
  std::uniform_int_distribution<int> db(0, nb - 1);
  std::uniform_real_distribution<double> dt0(0.25 * T, 1.6 * T);
  std::uniform_real_distribution<double> dsg(0.05 * T, 0.12 * T);
  std::uniform_real_distribution<double> damp(-1.0, 1.0);
  std::vector<RandomPulse> ps;
  for (int k = 0; k < count; ++k)
    ps.push_back({db(rng), dt0(rng), dsg(rng), damp(rng)});
  return ps;
}

bcm::BoundarySignal sample_pulses(const Session& s, const std::vector<RandomPulse>& ps) {
  bcm::BoundarySignal f = s.solver.zero_signal();
  for (const auto& p : ps)
    for (int k = 0; k < f.nt(); ++k) {
      const double u = (k * f.dt() - p.t0) / p.sigma;
      f.at(p.bindex, k) += p.amp * std::exp(-0.5 * u * u);
    }
  return f;
}

int cmd_grid_info(const bcm::ExperimentConfig& cfg, const std::string& out, int rscale) {
  Session s(cfg, rscale);
  bcm::CsvTable t({"key", "value"}, s.hash);
  const auto add = [&](const std::string& k, double v) {
    t.add_row({k, bcm::fmt_g(v)});
    std::cout << k << " = " << v << "\n";
  };
  add("dim", s.ex.grid.m);
  add("nx", s.ex.grid.nx);
  add("ny", s.ex.grid.ny);
  add("n_boundary", s.ex.grid.n_boundary());
  add("diameter", s.ex.diam);
  add("T", s.ex.T);
  add("dt", s.ex.axis.dt);
  add("nt", s.ex.axis.nt);
  add("c_min", s.ex.grid.cmin());
  add("c_max", s.ex.grid.cmax());
  t.write(out_path(out, "grid_info.csv"));
  return 0;
}

int cmd_blago_check(const bcm::ExperimentConfig& cfg, const std::string& out, int rscale) {
  std::mt19937 rng(cfg.seed);
  std::vector<std::vector<RandomPulse>> fs, hs;
  {
    Session probe(cfg, rscale);
    for (int k = 0; k < 10; ++k) {
      fs.push_back(draw_pulses(rng, probe.ex.grid.n_boundary(), probe.ex.T, 3));
      hs.push_back(draw_pulses(rng, probe.ex.grid.n_boundary(), probe.ex.T, 3));
    }
  }
  bcm::CsvTable t({"scale", "pair", "pairing", "interior", "rel_error"},
                  bcm::config_hash(cfg.raw));
  std::vector<double> med(2);
  for (int lvl = 0; lvl < 2; ++lvl) {
    Session s(cfg, rscale * (1 << lvl));
    std::vector<double> errs;
    for (int k = 0; k < 10; ++k) {
      const bcm::BoundarySignal f = sample_pulses(s, fs[k]);
      const bcm::BoundarySignal h = sample_pulses(s, hs[k]);
      const bcm::BoundarySignal Kf = bcm::connecting_K(*s.oracle, f);
      const double lhs = bcm::inner_b(Kf, h);
      const bcm::InteriorState uf = bcm::solve_wave(s.solver, f);
      const bcm::InteriorState uh = bcm::solve_wave(s.solver, h);
      const double rhs = bcm::inner_dV(s.ex.grid, uf.u, uh.u);
      const double den = bcm::norm_dV(s.ex.grid, uf.u) * bcm::norm_dV(s.ex.grid, uh.u);
      const double err = den > 0.0 ? std::abs(lhs - rhs) / den : 0.0;
      errs.push_back(err);
      t.add_row({std::to_string(rscale * (1 << lvl)), std::to_string(k),
                 bcm::fmt_g(lhs), bcm::fmt_g(rhs), bcm::fmt_g(err)});
    }
    std::sort(errs.begin(), errs.end());
    med[lvl] = 0.5 * (errs[4] + errs[5]);
  }
  const double ratio = med[1] > 0.0 ? med[0] / med[1] : 0.0;
  const double order = ratio > 0.0 ? std::log2(ratio) : 0.0;
  t.add_row({"order", "-", "-", "-", bcm::fmt_g(order)});
  t.write(out_path(out, "blago_check.csv"));
  std::cout << "median error coarse=" << med[0] << " fine=" << med[1]
            << " ratio=" << ratio << " order=" << order << "\n";
  return 0;
}

struct CutoffResult {
  double alpha;
  bcm::ControlPair x;
  bcm::IterationReport rep;
  double rel_err, ut_scaled;
};

CutoffResult run_one_cutoff(Session& s, double alpha, const bcm::InteriorState& gt,
                            double gt_norm, double uf_norm) {
  bcm::IterationConfig it = s.ex.cfg.iteration;
  it.alpha = alpha;
  auto [x, rep] = bcm::run_cutoff(*s.oracle, s.ex.f, s.ex.mask, it, s.qx, s.ex.cfg.solver);
  const bcm::InteriorState ua = bcm::solve_wave(s.solver, x.a);
  double diff = 0.0;
  std::vector<double> d(ua.u.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = ua.u[k] - gt.u[k];
  diff = bcm::norm_dV(s.ex.grid, d);
  CutoffResult r{alpha, std::move(x), std::move(rep), 0.0, 0.0};
  r.rel_err = gt_norm > 0.0 ? diff / gt_norm : diff;
  r.ut_scaled = uf_norm > 0.0
                    ? bcm::norm_dV(s.ex.grid, ua.ut) * s.ex.diam / uf_norm
                    : 0.0;
  return r;
}

int cmd_cutoff(const bcm::ExperimentConfig& cfg, const std::string& out, int rscale,
               int threads) {
  Session s(cfg, rscale);
  bcm::SpaceMask gamma = bcm::empty_mask(s.ex.grid);
  for (int b : cfg.mask_bset.empty() ? std::vector<int>{} : cfg.mask_bset)
    gamma.on[s.ex.grid.bnodes[b]] = 1;
  if (cfg.mask_bset.empty()) gamma = bcm::boundary_mask(s.ex.grid);
  const double depth =
      cfg.mask_depth > 0.0 ? cfg.mask_depth : -cfg.mask_depth * s.ex.diam;
  const bcm::SpaceMask N = bcm::domain_of_influence(s.ex.grid, gamma, depth);
  const bcm::InteriorState gt = bcm::ground_truth_cutoff(s.solver, s.ex.f, N);
  const double gt_norm = bcm::norm_dV(s.ex.grid, gt.u);
  const bcm::InteriorState uf = bcm::solve_wave(s.solver, s.ex.f);
  const double uf_norm = bcm::norm_dV(s.ex.grid, uf.u);

  std::vector<CutoffResult> results(cfg.alpha_schedule.size(),
                                    CutoffResult{0, bcm::ControlPair(), {}, 0, 0});
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i; (i = next.fetch_add(1)) < static_cast<int>(cfg.alpha_schedule.size());)
      results[i] = run_one_cutoff(s, cfg.alpha_schedule[i], gt, gt_norm, uf_norm);
  };
  const int nthreads = std::max(1, std::min<int>(threads, cfg.alpha_schedule.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  bcm::CsvTable t({"alpha", "iterations", "converged", "oracle_count", "residual",
                   "rel_error", "ut_scaled"},
                  s.hash);
  bool all_ok = true;
  for (const auto& r : results) {
    all_ok = all_ok && r.rep.converged;
    t.add_row({bcm::fmt_g(r.alpha), std::to_string(r.rep.change.size()),
               r.rep.converged ? "1" : "0", std::to_string(r.rep.oracle_count),
               bcm::fmt_g(r.rep.residual), bcm::fmt_g(r.rel_err),
               bcm::fmt_g(r.ut_scaled)});
    char name[64];
    std::snprintf(name, sizeof(name), "cutoff_a%.0e.signal", r.alpha);
    bcm::write_signal_atomic(out_path(out, name), r.x.a);
    const bcm::InteriorState ua = bcm::solve_wave(s.solver, r.x.a);
    std::snprintf(name, sizeof(name), "cutoff_uT_a%.0e.field", r.alpha);
    bcm::write_field(out_path(out, name), s.ex.grid, ua.u, s.hash);
  }
  bcm::write_field(out_path(out, "cutoff_truth.field"), s.ex.grid, gt.u, s.hash);
  t.write(out_path(out, "cutoff.csv"));
  for (const auto& r : results)
    std::cout << "alpha=" << r.alpha << " rel_error=" << r.rel_err
              << " ut_scaled=" << r.ut_scaled << " converged=" << r.rep.converged
              << "\n";
  if (!all_ok) throw NonConvergence("cutoff: at least one alpha did not converge");
  return 0;
}

int cmd_focus(const bcm::ExperimentConfig& cfg, const std::string& out, int rscale,
              int threads) {
  Session s(cfg, rscale);
  if (!s.ex.cfg.has_focus) throw bcm::ConfigError("focus: config has no focus section");
  const bcm::FocusSpec fs = bcm::make_focus_spec(s.ex);
  const double alpha = fs.alpha_schedule.back();
  const int j = static_cast<int>(fs.gammas.size()) - 1;

  std::vector<bcm::BoundarySignal> bs(fs.eps_schedule.size(), s.solver.zero_signal());
  std::vector<bool> ok(fs.eps_schedule.size(), false);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i; (i = next.fetch_add(1)) < static_cast<int>(fs.eps_schedule.size());) {
      auto [b, r1, r2] = bcm::focus_iterate(*s.oracle, s.ex.grid, fs, alpha, j,
                                            fs.eps_schedule[i], s.qx,
                                            s.ex.cfg.iteration, s.ex.cfg.solver);
      bs[i] = std::move(b);
      ok[i] = r1.converged && r2.converged;
    }
  };
  const int nthreads = std::max(1, std::min<int>(threads, fs.eps_schedule.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const std::vector<double> alphas(fs.eps_schedule.size(), alpha);
  const std::vector<int> js(fs.eps_schedule.size(), j);
  const bcm::FocusReport rep =
      bcm::delta_test(s.solver, bs, alphas, js, fs.eps_schedule, fs);
  bcm::CsvTable t({"alpha", "j", "eps", "phi", "pairing", "target", "ratio",
                   "mass_fraction", "ut_norm"},
                  s.hash);
  for (const auto& row : rep.rows) {
    const double ratio = row.target != 0.0 ? row.pairing / row.target : 0.0;
    t.add_row({bcm::fmt_g(row.alpha), std::to_string(row.j), bcm::fmt_g(row.eps),
               row.phi_id, bcm::fmt_g(row.pairing), bcm::fmt_g(row.target),
               bcm::fmt_g(ratio), bcm::fmt_g(row.mass_fraction),
               bcm::fmt_g(row.ut_norm)});
  }
  t.write(out_path(out, "focus.csv"));
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const bcm::InteriorState ub = bcm::solve_wave(s.solver, bs[i]);
    char name[64];
    std::snprintf(name, sizeof(name), "focus_uT_e%zu.field", i);
    bcm::write_field(out_path(out, name), s.ex.grid, ub.u, s.hash);
    std::snprintf(name, sizeof(name), "focus_b_e%zu.signal", i);
    bcm::write_signal_atomic(out_path(out, name), bs[i]);
  }
  std::cout << "c_hat=" << rep.c_hat_value << " +- " << rep.c_hat_uncertainty
            << " uf(xhat)=" << rep.uf_at_xhat << "\n";
  for (const auto& row : rep.rows)
    if (row.phi_id == "const")
      std::cout << "eps=" << row.eps << " pairing=" << row.pairing
                << " target=" << row.target << " massfrac=" << row.mass_fraction
                << "\n";
  for (bool o : ok)
    if (!o) throw NonConvergence("focus: a cutoff run did not converge");
  return 0;
}

int cmd_oracle_count(const bcm::ExperimentConfig& cfg, const std::string& out,
                     int rscale) {
  Session s(cfg, rscale);
  bcm::IterationConfig it = s.ex.cfg.iteration;
  it.alpha = cfg.alpha_schedule.front();
  it.max_iter = 3;
  it.tol = 0.0;  // force exactly max_iter iterations
  bcm::CsvTable t({"mode", "iterations", "oracle_count", "expected"}, s.hash);
  std::vector<bcm::ControlPair> xs;
  for (const auto mode : {bcm::SharingMode::naive, bcm::SharingMode::shared}) {
    it.mode = mode;
    // the counter starts after the norm estimate: it covers the rhs (2 calls)
    // plus n iterations
    auto [x, rep] = bcm::iterate_cutoff(*s.oracle, s.ex.f, s.ex.mask, it, s.qx);
    const long long n = static_cast<long long>(rep.change.size());
    const long long expected = 2 + (mode == bcm::SharingMode::naive ? 10 : 6) * n;
    t.add_row({mode == bcm::SharingMode::naive ? "naive" : "shared",
               std::to_string(n), std::to_string(rep.oracle_count),
               std::to_string(expected)});
    std::cout << (mode == bcm::SharingMode::naive ? "naive" : "shared") << " n=" << n
              << " count=" << rep.oracle_count << " expected=" << expected << "\n";
    xs.push_back(std::move(x));
  }
  const double dn = bcm::norm_X(xs[0] - xs[1]) / std::max(1e-300, bcm::norm_X(xs[0]));
  std::cout << "naive/shared relative difference = " << dn << "\n";
  t.write(out_path(out, "oracle_count.csv"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary-control wave experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 1, rscale = 1;
  std::string sweep_axis = "alpha";
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--threads", threads, "worker threads for sweeps");
  app.add_option("--resolution-scale", rscale, "grid refinement factor");

  auto* c_blago = app.add_subcommand("blago-check", "identity refinement study");
  auto* c_cutoff = app.add_subcommand("cutoff", "regularized cutoff sweep");
  auto* c_focus = app.add_subcommand("focus", "focusing schedule run");
  auto* c_sweep = app.add_subcommand("sweep", "orchestrated schedule sweep");
  c_sweep->add_option("--axis", sweep_axis, "schedule axis: alpha or eps");
  auto* c_count = app.add_subcommand("oracle-count", "measurement accounting");
  auto* c_info = app.add_subcommand("grid-info", "grid and schedule summary");

  CLI11_PARSE(app, argc, argv);

  try {
    const bcm::ExperimentConfig cfg = bcm::parse_config_file(config_path);
    const std::string out = out_dir.empty() ? cfg.out_dir : out_dir;
    if (threads < 1) throw bcm::ConfigError("--threads must be >= 1");
    if (rscale < 1) throw bcm::ConfigError("--resolution-scale must be >= 1");
    if (c_info->parsed()) return cmd_grid_info(cfg, out, rscale);
    if (c_blago->parsed()) return cmd_blago_check(cfg, out, rscale);
    if (c_cutoff->parsed()) return cmd_cutoff(cfg, out, rscale, 1);
    if (c_focus->parsed()) return cmd_focus(cfg, out, rscale, 1);
    if (c_count->parsed()) return cmd_oracle_count(cfg, out, rscale);
    if (c_sweep->parsed()) {
      if (sweep_axis == "alpha") return cmd_cutoff(cfg, out, rscale, threads);
      if (sweep_axis == "eps") return cmd_focus(cfg, out, rscale, threads);
      throw bcm::ConfigError("sweep --axis must be alpha or eps");
    }
  } catch (const bcm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 3;
  } catch (const bcm::BudgetError& e) {
    std::cerr << "resource budget: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
