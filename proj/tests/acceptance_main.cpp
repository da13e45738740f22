// Acceptance suite: one line per criterion, [PASS]/[FAIL] up front, details
// indented.  Exit code is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rehearsal/config.hpp"
#include "rehearsal/io.hpp"
#include "rehearsal/metrics.hpp"
#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/solver.hpp"
#include "rehearsal/theory.hpp"
#include "rehearsal/trainers.hpp"
#include "rehearsal/verifier.hpp"

namespace fs = std::filesystem;
using namespace rehearsal;

namespace {

std::string g_cli_path;

struct criterion_result {
  bool passed = false;
  std::vector<std::string> details;
};

bool rel_close(double a, double b, double tol) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= tol * scale;
}

std::string fmt(double v) { return format_double(v); }

problem_config paper_cfg() {
  problem_config cfg;
  cfg.T = 5;
  cfg.p = 500;
  cfg.n = 24;
  cfg.M = 24;
  cfg.sigma = 0;
  return cfg;
}

// ---------------------------------------------------------------------------
// 1. simulation-vs-theory agreement and the crossover along the gap axis
// ---------------------------------------------------------------------------

criterion_result criterion_fig2() {
  criterion_result res;
  const problem_config cfg = paper_cfg();
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.19 * k);  // (0, 1.9]

  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;
  strategy_spec hyb;
  hyb.kind = strategy_kind::hybrid;
  hyb.partition.mode = partition_rule::mode_t::gap_threshold;
  hyb.partition.gap_tau = 1.0;

  const auto swept = sweep(cfg, sweep_axis::gap_sq, grid, {conc, seq, hyb}, 1000, 71,
                           ground_truth_kind::equal_gap, 1.0, 101, {});

  bool within = true;
  double worst_z = 0;
  int hybrid_misses = 0;
  for (std::size_t s = 0; s < swept.series.size(); ++s) {
    const auto& ser = swept.series[s];
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double zf = std::abs(ser.F[i].mean - ser.theory_F[i]) / ser.F[i].std_error;
      const double zg = std::abs(ser.G[i].mean - ser.theory_G[i]) / ser.G[i].std_error;
      if (ser.strategy == "hybrid") {
        hybrid_misses += (zf > 3) + (zg > 3);
        continue;
      }
      worst_z = std::max({worst_z, zf, zg});
      within &= zf <= 3 && zg <= 3;
    }
  }
  res.details.push_back("worst |empirical - theory| / SE over concurrent+sequential: " +
                        fmt(worst_z) + " (limit 3)");
  res.details.push_back("hybrid series swept alongside; points beyond 3 SE: " +
                        std::to_string(hybrid_misses));

  const auto& cF = swept.series[0].F;
  const auto& sF = swept.series[1].F;
  const auto& cG = swept.series[0].G;
  const auto& sG = swept.series[1].G;
  const bool conc_first = cF.front().mean < sF.front().mean && cG.front().mean < sG.front().mean;
  const bool seq_last = sF.back().mean < cF.back().mean && sG.back().mean < cG.back().mean;
  const bool crossed = swept.crossover_F.has_value() && swept.crossover_G.has_value();
  if (crossed) {
    res.details.push_back("empirical crossovers: F at gap_sq " + fmt(*swept.crossover_F) +
                          ", G at gap_sq " + fmt(*swept.crossover_G));
  } else {
    res.details.push_back("no crossover found on the grid");
  }
  res.details.push_back(std::string("concurrent better at gap_sq 0.19: ") +
                        (conc_first ? "yes" : "no") + ", sequential better at 1.9: " +
                        (seq_last ? "yes" : "no"));
  res.passed = within && crossed && conc_first && seq_last;
  return res;
}

// ---------------------------------------------------------------------------
// 2. two-task thresholds and the iff predicate
// ---------------------------------------------------------------------------

criterion_result criterion_two_task() {
  criterion_result res;
  problem_config cfg;
  cfg.T = 2;
  cfg.p = 500;
  cfg.n = 24;
  cfg.M = 24;
  cfg.sigma = 0;
  const double p = cfg.p, n = cfg.n, M = cfg.M;

  const auto probe = two_task(cfg, ground_truth_view::equal_gap(2, 1.0));
  const double want_f = (p - n) * (p - n - M - 1) / (p * p + p * (p - n - M - 1));
  const double want_g =
      (p - n) * (p - n - M - 1) / (2 * p * p + (p - n) * (p - n - M - 1)) * 2.0;

  auto bisect = [&](auto&& fn) {
    double lo = 1e-6, hi = 3.9;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fn(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double root_f = bisect([&](double gap) {
    const auto tt = two_task(cfg, ground_truth_view::equal_gap(2, gap));
    return tt.F2_conc - tt.F2_seq;
  });
  const double root_g = bisect([&](double gap) {
    const auto tt = two_task(cfg, ground_truth_view::equal_gap(2, gap));
    return tt.G2_conc - tt.G2_seq;
  });

  const bool roots_ok = rel_close(root_f, probe.forgetting_gap_root_sigma0, 1e-10) &&
                        rel_close(probe.forgetting_gap_root_sigma0, want_f, 1e-10) &&
                        rel_close(root_g, probe.generalization_gap_root_sigma0, 1e-10) &&
                        rel_close(probe.generalization_gap_root_sigma0, want_g, 1e-10);
  res.details.push_back("F root: closed form " + fmt(want_f) + ", numeric " + fmt(root_f));
  res.details.push_back("G root: closed form " + fmt(want_g) + ", numeric " + fmt(root_g));

  int disagreements = 0;
  for (int gi = 0; gi < 10; ++gi)
    for (int si = 0; si < 10; ++si) {
      cfg.sigma = 2.0 * si / 9.0;
      const double gap = 0.02 + 3.8 * gi / 9.0;
      const auto tt = two_task(cfg, ground_truth_view::equal_gap(2, gap));
      if ((tt.F2_conc > tt.F2_seq) != tt.forgetting_concurrent_worse) disagreements += 1;
      if ((tt.G2_conc > tt.G2_seq) != tt.generalization_concurrent_worse) disagreements += 1;
      if (!(tt.xi1 > 0 && tt.xi2 > 0 && tt.mu1 > 0 && tt.mu2 > 0)) disagreements += 1;
    }
  res.details.push_back("iff predicate disagreements on the 100-point (gap, sigma) grid: " +
                        std::to_string(disagreements));
  res.passed = roots_ok && disagreements == 0;
  return res;
}

// ---------------------------------------------------------------------------
// 3. orthonormal comparison at the large-p schedule
// ---------------------------------------------------------------------------

criterion_result criterion_orthonormal_comparison() {
  criterion_result res;
  problem_config cfg;
  cfg.T = 4;
  cfg.n = 10;
  cfg.M = 4;
  cfg.sigma = 0;
  cfg.p = static_cast<int>(orthonormal_schedule_p(cfg.T, cfg.n, cfg.M));
  res.details.push_back("schedule p = " + std::to_string(cfg.p));

  const auto gt = generate_ground_truth(ground_truth_kind::orthonormal, cfg.T, cfg.p, 0, 51);
  const ground_truth_view view = ground_truth_view::of(gt);
  const auto rc = predict_recursive(cfg, view, strategy_kind::concurrent);
  const auto rs = predict_recursive(cfg, view, strategy_kind::sequential);
  const auto tc =
      assemble_from_coefficients(predict_coefficients(cfg, strategy_kind::concurrent), view, 0);
  const auto ts =
      assemble_from_coefficients(predict_coefficients(cfg, strategy_kind::sequential), view, 0);
  const bool theory_ok =
      rc.F > rs.F && rc.G > rs.G && tc.F > ts.F && tc.G > ts.G;
  res.details.push_back("theory route 1: F diff " + fmt(rc.F - rs.F) + ", G diff " +
                        fmt(rc.G - rs.G));
  res.details.push_back("theory route 2: F diff " + fmt(tc.F - ts.F) + ", G diff " +
                        fmt(tc.G - ts.G));

  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;
  mc_options opts;
  opts.keep_samples = true;
  const long trials = 1000;
  const auto runs = run_trials_multi(cfg, gt, {conc, seq}, trials, 777, opts);

  auto paired = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0, sumsq = 0;
    for (long k = 0; k < trials; ++k) {
      const double d = a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)];
      sum += d;
      sumsq += d * d;
    }
    const double mean = sum / trials;
    const double var = (sumsq / trials - mean * mean) * trials / (trials - 1.0);
    return std::pair<double, double>(mean, std::sqrt(var / trials));
  };
  const auto [fd, fse] = paired(runs[0].F_samples, runs[1].F_samples);
  const auto [gd, gse] = paired(runs[0].G_samples, runs[1].G_samples);
  const bool mc_ok = fd > 3 * fse && gd > 3 * gse;
  res.details.push_back("paired Monte Carlo (common draws, " + std::to_string(trials) +
                        " trials): F diff " + fmt(fd) + " +- " + fmt(fse) + ", G diff " +
                        fmt(gd) + " +- " + fmt(gse));
  if (!mc_ok) {
    const double z = (rc.F - rs.F) / fse;
    res.details.push_back(
        "sign resolution is out of reach at this scale: the theoretical difference " +
        fmt(rc.F - rs.F) + " sits at z = " + fmt(z) +
        " of the best 10^3-trial estimator's standard error; > 3 SE would need roughly " +
        std::to_string(static_cast<long>(trials * std::pow(3.0 / std::max(z, 1e-6), 2))) +
        " paired trials because the difference scales as 1/p^2 while the Monte Carlo error "
        "scales as sqrt(nM/p)/p");
  }
  res.passed = theory_ok && mc_ok;
  return res;
}

// ---------------------------------------------------------------------------
// 4. memoryless coefficient consistency
// ---------------------------------------------------------------------------

criterion_result criterion_memoryless() {
  criterion_result res;
  int configs = 0;
  double worst = 0;
  for (int T = 2; T <= 6; ++T)
    for (int n : {4, 8, 16, 24}) {
      problem_config cfg;
      cfg.T = T;
      cfg.n = n;
      cfg.M = 0;
      cfg.p = 6 * n + 5 * T;
      cfg.sigma = 0.5;
      const auto conc = predict_coefficients(cfg, strategy_kind::concurrent);
      const auto seq = predict_coefficients(cfg, strategy_kind::sequential);
      for (int t = 1; t <= T; ++t) {
        auto gap = [&](double a, double b) {
          return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
        };
        worst = std::max(worst, gap(conc.d_0t(t), seq.d_0t(t)));
        worst = std::max(worst, gap(conc.noise_t(t, cfg.sigma), seq.noise_t(t, cfg.sigma)));
        for (int i = 1; i <= T; ++i)
          for (int j = 1; j <= T; ++j)
            for (int k = j + 1; k <= T; ++k)
              if (conc.d_ijkt(i, j, k, t) != 0 || seq.d_ijkt(i, j, k, t) != 0)
                worst = std::max(worst, gap(conc.d_ijkt(i, j, k, t), seq.d_ijkt(i, j, k, t)));
      }
      configs += 1;
    }
  res.details.push_back(std::to_string(configs) +
                        " memoryless configs; worst relative table gap " + fmt(worst));
  res.passed = configs == 20 && worst <= 1e-12;
  return res;
}

// ---------------------------------------------------------------------------
// 5. dual-theory oracle
// ---------------------------------------------------------------------------

criterion_result criterion_dual_oracle() {
  criterion_result res;
  rng g(616);
  double worst = 0;
  int checked = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int T = 2 + int(g.uniform01() * 4.99);
    const int n = 2 + int(g.uniform01() * 24);
    const int M = int(g.uniform01() * 24);
    const int p = n + M + 3 + int(g.uniform01() * 500);
    const double sigma = g.uniform01() < 0.4 ? 0.0 : g.uniform01();
    problem_config cfg;
    cfg.T = T;
    cfg.p = p;
    cfg.n = n;
    cfg.M = M;
    cfg.sigma = sigma;
    ground_truth_view view = ground_truth_view::equal_gap(T, g.uniform01() * 1.8);
    for (auto& nm : view.sq_norms) nm = 0.25 + g.uniform01();
    theory_partitions parts;
    for (int t = 2; t <= T; ++t) {
      std::vector<int> sim;
      for (int h = 1; h < t; ++h)
        if (g.uniform01() < 0.5) sim.push_back(h);
      parts.sim.push_back(std::move(sim));
    }
    for (auto kind :
         {strategy_kind::concurrent, strategy_kind::sequential, strategy_kind::hybrid}) {
      const theory_partitions* pp = kind == strategy_kind::hybrid ? &parts : nullptr;
      const auto direct = predict_recursive(cfg, view, kind, pp);
      const auto assembled =
          assemble_from_coefficients(predict_coefficients(cfg, kind, pp), view, sigma);
      auto gap = [&](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
      };
      worst = std::max(worst, gap(direct.F, assembled.F));
      worst = std::max(worst, gap(direct.G, assembled.G));
      checked += 1;
    }
  }
  res.details.push_back(std::to_string(checked) +
                        " (config, strategy) pairs; worst relative F/G gap " + fmt(worst));

  // specialized closed forms against the recursion at sigma = 0
  problem_config c2;
  c2.T = 2;
  c2.p = 500;
  c2.n = 24;
  c2.M = 24;
  ground_truth_view v2 = ground_truth_view::equal_gap(2, 1.3);
  const auto tt = two_task(c2, v2);
  const auto r2c = predict_recursive(c2, v2, strategy_kind::concurrent);
  const auto r2s = predict_recursive(c2, v2, strategy_kind::sequential);
  const bool two_ok = rel_close(tt.F2_conc, r2c.F, 1e-10) && rel_close(tt.G2_conc, r2c.G, 1e-10) &&
                      rel_close(tt.F2_seq, r2s.F, 1e-10) && rel_close(tt.G2_seq, r2s.G, 1e-10);

  problem_config c3;
  c3.T = 3;
  c3.p = 400;
  c3.n = 16;
  c3.M = 12;
  ground_truth_view v3 = ground_truth_view::equal_gap(3, 0.9);
  v3.sq_norms = {1.0, 1.2, 0.8};
  const auto t3 = three_task(c3, v3);
  const auto r3c = predict_recursive(c3, v3, strategy_kind::concurrent);
  const auto r3s = predict_recursive(c3, v3, strategy_kind::sequential);
  const bool three_ok = rel_close(t3.F3_conc, r3c.F, 1e-10) &&
                        rel_close(t3.G3_conc, r3c.G, 1e-10) &&
                        rel_close(t3.F3_seq, r3s.F, 1e-10) && rel_close(t3.G3_seq, r3s.G, 1e-10);
  res.details.push_back(std::string("T=2 closed forms vs recursion: ") +
                        (two_ok ? "agree" : "DISAGREE") + "; T=3: " +
                        (three_ok ? "agree" : "DISAGREE"));
  res.passed = worst <= 1e-10 && two_ok && three_ok;
  return res;
}

// ---------------------------------------------------------------------------
// 6. hybrid reductions, trainer and theory
// ---------------------------------------------------------------------------

criterion_result criterion_hybrid_reductions() {
  criterion_result res;
  problem_config cfg;
  cfg.T = 4;
  cfg.p = 150;
  cfg.n = 10;
  cfg.M = 9;
  cfg.sigma = 0.2;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 4, cfg.p, 1.1, 7);

  strategy_spec all_sim;
  all_sim.partition.mode = partition_rule::mode_t::gap_threshold;
  all_sim.partition.gap_tau = 10.0;
  strategy_spec all_dis;
  all_dis.partition.mode = partition_rule::mode_t::gap_threshold;
  all_dis.partition.gap_tau = -1.0;
  strategy_spec seq_spec;

  double trace_gap = 0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto conc = train_concurrent(cfg, gt, seed);
    const auto hyb_sim = train_hybrid(cfg, gt, all_sim, seed);
    const auto seq = train_sequential(cfg, gt, seq_spec, seed);
    const auto hyb_dis = train_hybrid(cfg, gt, all_dis, seed);
    for (std::size_t t = 0; t < conc.params.size(); ++t) {
      trace_gap = std::max(trace_gap,
                           (conc.params[t] - hyb_sim.params[t]).cwiseAbs().maxCoeff());
      trace_gap = std::max(trace_gap,
                           (seq.params[t] - hyb_dis.params[t]).cwiseAbs().maxCoeff());
    }
  }
  res.details.push_back("largest trainer trace deviation across reductions: " + fmt(trace_gap));

  const ground_truth_view view = ground_truth_view::of(gt);
  const auto sim_parts = theory_partitions::all_similar(cfg.T);
  const auto dis_parts = theory_partitions::all_dissimilar(cfg.T);
  const auto pc = predict_recursive(cfg, view, strategy_kind::concurrent);
  const auto ps = predict_recursive(cfg, view, strategy_kind::sequential);
  const auto hc = predict_recursive(cfg, view, strategy_kind::hybrid, &sim_parts);
  const auto hs = predict_recursive(cfg, view, strategy_kind::hybrid, &dis_parts);
  const bool theory_ok = rel_close(pc.F, hc.F, 1e-12) && rel_close(pc.G, hc.G, 1e-12) &&
                         rel_close(ps.F, hs.F, 1e-12) && rel_close(ps.G, hs.G, 1e-12);
  res.details.push_back(std::string("theory reductions at 1e-12: ") +
                        (theory_ok ? "hold" : "VIOLATED"));
  res.passed = trace_gap == 0.0 && theory_ok;
  return res;
}

// ---------------------------------------------------------------------------
// 7. random-matrix identity suite
// ---------------------------------------------------------------------------

criterion_result criterion_identities() {
  criterion_result res;
  const auto rep = verify_identities(100, {10, 20}, 10000, 424242, 0);
  for (const auto& row : rep.rows)
    res.details.push_back(row.name + " m=" + std::to_string(row.m) + ": z = " + fmt(row.z));
  res.passed = rep.max_abs_z < 4.0;
  return res;
}

// ---------------------------------------------------------------------------
// 8. scalar lemma grid
// ---------------------------------------------------------------------------

criterion_result criterion_lemmas() {
  criterion_result res;
  const auto rep = check_scalar_lemmas();
  res.details.push_back("asserted " + std::to_string(rep.asserted) + ", failed " +
                        std::to_string(rep.failed) + ", marginal " +
                        std::to_string(rep.marginal) + ", skipped " +
                        std::to_string(rep.skipped));
  for (const auto& pt : rep.points) {
    if (!pt.asserted || (pt.passed && !pt.marginal)) continue;
    std::string line = pt.marginal ? "marginal:" : "FAILED:";
    line += " lemma " + scalar_lemma_names()[static_cast<std::size_t>(pt.params.at("lemma"))];
    for (const auto& [k, v] : pt.params)
      if (k != "lemma") line += " " + k + "=" + fmt(v);
    res.details.push_back(line);
  }
  res.passed = rep.failed == 0;
  return res;
}

// ---------------------------------------------------------------------------
// 9. solver properties and CLI determinism
// ---------------------------------------------------------------------------

criterion_result criterion_solver_determinism() {
  criterion_result res;
  rng g(90210);
  bool solver_ok = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const int p = 30 + int(g.uniform01() * 70);
    const int m = 2 + int(g.uniform01() * std::min(20, p - 2));
    Eigen::MatrixXd X(p, m);
    g.fill_gaussian(X);
    Eigen::VectorXd Y(m), start(p), v(p);
    g.fill_gaussian(Y);
    g.fill_gaussian(start);
    g.fill_gaussian(v);
    const auto fit = min_norm_fit(X, Y, start);
    solver_ok &= fit.residual_norm <= fit_tolerance(Y);
    const Eigen::VectorXd step = fit.w - start;
    solver_ok &= (step - project(X, step)).cwiseAbs().maxCoeff() <= fit_tolerance(Y);
    const Eigen::VectorXd pv = project(X, v);
    solver_ok &=
        std::abs(pv.squaredNorm() + (v - pv).squaredNorm() - v.squaredNorm()) <= 1e-10 * v.squaredNorm();
  }
  res.details.push_back(std::string("interpolation/minimality/pythagoras on 1000 instances: ") +
                        (solver_ok ? "pass" : "FAIL"));

  bool deterministic = true;
  if (g_cli_path.empty()) {
    res.details.push_back("no --cli path given; CLI determinism not exercised");
    deterministic = false;
  } else {
    const fs::path dir = fs::temp_directory_path() / "rehearsal_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "sim.ini") << "[problem]\nT = 3\np = 120\nn = 10\nM = 10\n"
                                      "[run]\ntrials = 60\nseed = 5\nworkers = 2\n";
    std::ofstream(dir / "sweep.ini") << "[problem]\nT = 3\np = 120\nn = 10\nM = 10\n"
                                        "[run]\ntrials = 60\nseed = 5\nworkers = 2\n"
                                        "[sweep]\naxis = gap_sq\ngrid = 0.4,1.0,1.6\n";
    auto shell = [&](const std::string& s) { return std::system(s.c_str()) == 0; };
    deterministic &= shell(g_cli_path + " simulate --config " + (dir / "sim.ini").string() +
                           " --out " + (dir / "a").string() + " > /dev/null");
    deterministic &= shell(g_cli_path + " simulate --config " + (dir / "sim.ini").string() +
                           " --out " + (dir / "b").string() + " > /dev/null");
    deterministic &= shell(g_cli_path + " sweep --config " + (dir / "sweep.ini").string() +
                           " --out " + (dir / "c").string() + " > /dev/null");
    deterministic &= shell(g_cli_path + " sweep --config " + (dir / "sweep.ini").string() +
                           " --out " + (dir / "d").string() + " > /dev/null");
    if (deterministic) {
      deterministic &= read_text_file(dir / "a" / "results.csv") ==
                       read_text_file(dir / "b" / "results.csv");
      deterministic &= read_text_file(dir / "a" / "results.json") ==
                       read_text_file(dir / "b" / "results.json");
      deterministic &= read_text_file(dir / "c" / "results.csv") ==
                       read_text_file(dir / "d" / "results.csv");
      deterministic &= read_text_file(dir / "c" / "figure.svg") ==
                       read_text_file(dir / "d" / "figure.svg");
    }
    res.details.push_back(std::string("simulate/sweep reruns byte-identical: ") +
                          (deterministic ? "yes" : "NO"));
  }
  res.passed = solver_ok && deterministic;
  return res;
}

// ---------------------------------------------------------------------------
// 10. asymptotic trends in p
// ---------------------------------------------------------------------------

criterion_result criterion_asymptotics() {
  criterion_result res;
  const std::vector<int> pgrid{1000, 3162, 10000, 31623, 100000, 316228, 1000000};
  bool ok = true;
  for (auto kind : {strategy_kind::concurrent, strategy_kind::sequential}) {
    double prev_f = std::numeric_limits<double>::infinity();
    double prev_d = std::numeric_limits<double>::infinity();
    double final_f = 0, final_d = 0;
    for (int p : pgrid) {
      problem_config cfg = paper_cfg();
      cfg.p = p;
      const auto pred =
          predict_recursive(cfg, ground_truth_view::equal_gap(cfg.T, 1.0), kind);
      const auto tab = predict_coefficients(cfg, kind);
      double dmax = 0;
      for (int i = 1; i <= cfg.T; ++i)
        for (int j = 1; j <= cfg.T; ++j)
          for (int k = j + 1; k <= cfg.T; ++k)
            dmax = std::max(dmax, std::abs(tab.d_ijkt(i, j, k, cfg.T)));
      ok &= std::abs(pred.F) < prev_f && dmax < prev_d;
      prev_f = std::abs(pred.F);
      prev_d = dmax;
      final_f = std::abs(pred.F);
      final_d = dmax;
    }
    ok &= final_f < 1e-3 && final_d < 1e-3;
    res.details.push_back(std::string(to_string(kind)) + ": |F| at p=1e6 is " + fmt(final_f) +
                          ", max d_ijkT " + fmt(final_d));
  }
  res.passed = ok;
  return res;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];

  struct entry {
    int number;
    const char* title;
    std::function<criterion_result()> run;
  };
  const std::vector<entry> criteria{
      {1, "gap sweep: simulation matches theory; crossover present", criterion_fig2},
      {2, "two-task thresholds and iff predicate", criterion_two_task},
      {3, "orthonormal comparison at the large-p schedule", criterion_orthonormal_comparison},
      {4, "memoryless coefficient consistency", criterion_memoryless},
      {5, "dual-theory oracle", criterion_dual_oracle},
      {6, "hybrid reductions", criterion_hybrid_reductions},
      {7, "random-matrix identity suite", criterion_identities},
      {8, "scalar lemma grid", criterion_lemmas},
      {9, "solver properties and CLI determinism", criterion_solver_determinism},
      {10, "asymptotic trends in p", criterion_asymptotics},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    criterion_result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.passed = false;
      r.details.push_back(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d: %s\n", r.passed ? "PASS" : "FAIL", c.number, c.title);
    for (const auto& d : r.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    failures += r.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
