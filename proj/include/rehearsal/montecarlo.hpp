#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/metrics.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/rng.hpp"
#include "rehearsal/theory.hpp"
#include "rehearsal/trainers.hpp"

namespace rehearsal {

struct estimate_with_error {
  double mean = 0;
  double std_error = 0;
  long trials = 0;
};

namespace mc_detail {

// compensated summation so aggregation is exact up to rounding and
// independent of how trials were scheduled across workers
struct neumaier_sum {
  double sum = 0, comp = 0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline estimate_with_error summarize(const std::vector<double>& xs) {
  estimate_with_error e;
  e.trials = static_cast<long>(xs.size());
  if (e.trials == 0) return e;
  neumaier_sum s;
  for (double x : xs) s.add(x);
  e.mean = s.value() / e.trials;
  if (e.trials >= 2) {
    neumaier_sum q;
    for (double x : xs) q.add((x - e.mean) * (x - e.mean));
    e.std_error = std::sqrt(q.value() / (e.trials - 1)) / std::sqrt(double(e.trials));
  }
  return e;
}

inline void parallel_for(long count, int workers, const std::function<void(long)>& body) {
  int nw = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  if (nw < 1) nw = 1;
  if (nw == 1 || count < 2) {
    for (long k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const long k = next.fetch_add(1);
      if (k >= count) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  for (int i = 0; i < nw; ++i) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mc_detail

struct mc_options {
  int workers = 0;           // 0 = hardware concurrency
  bool keep_samples = false; // retain per-trial F/G values
  // exploratory: redraw the geometry per trial (expectation over w* too);
  // acceptance-grade runs keep the ground truth fixed
  std::function<ground_truth_set(long trial)> regenerate_geometry;
};

struct run_result {
  std::string strategy;
  estimate_with_error F, G;
  std::vector<std::vector<estimate_with_error>> error_table;  // [i-1][t-1]
  long failures = 0;
  long trials = 0;
  std::vector<double> F_samples, G_samples;                    // when keep_samples
  std::vector<std::vector<std::vector<int>>> realized_sim;     // per trial, hybrid only
};

// Runs every strategy on the same per-trial data: trial k derives its seed
// from the master seed, draws each task round once, and advances all
// strategies in lockstep.  Results are therefore common-random-number paired
// across strategies and bit-identical for any worker count.
inline std::vector<run_result> run_trials_multi(const problem_config& cfg,
                                                const ground_truth_set& gt,
                                                const std::vector<strategy_spec>& specs,
                                                long trials, std::uint64_t seed,
                                                const mc_options& opts = {}) {
  cfg.validate();
  if (trials < 2) throw config_invalid("trials", "need trials >= 2 for a defined std error");
  if (specs.empty()) throw config_invalid("strategy", "need at least one strategy");
  const int S = static_cast<int>(specs.size());
  const int T = cfg.T;

  struct slot {
    double F = 0, G = 0;
    Eigen::MatrixXd errors;
    std::vector<std::vector<int>> realized;
    bool failed = false;
  };
  std::vector<std::vector<slot>> slots(static_cast<std::size_t>(S));
  for (auto& v : slots) v.resize(static_cast<std::size_t>(trials));

  mc_detail::parallel_for(trials, opts.workers, [&](long k) {
    const ground_truth_set* gtp = &gt;
    ground_truth_set local_gt;
    if (opts.regenerate_geometry) {
      local_gt = opts.regenerate_geometry(k);
      gtp = &local_gt;
    }
    rng g = rng::for_stream(seed, stream::trial, static_cast<std::uint64_t>(k));
    std::vector<trainer_state> states;
    states.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) states.push_back(make_trainer_state(cfg.p));
    bool failed = false;
    try {
      for (int t = 1; t <= T && !failed; ++t) {
        const task_round round = draw_round(*gtp, cfg, t, g);
        for (int s = 0; s < S; ++s) advance(states[static_cast<std::size_t>(s)], specs[static_cast<std::size_t>(s)], round, gtp);
      }
    } catch (const singular_gram&) {
      failed = true;
    }
    for (int s = 0; s < S; ++s) {
      auto& out = slots[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
      if (failed) {
        out.failed = true;
        continue;
      }
      const auto& st = states[static_cast<std::size_t>(s)];
      out.errors.resize(T, T);
      for (int t = 1; t <= T; ++t)
        for (int i = 1; i <= T; ++i)
          out.errors(i - 1, t - 1) =
              (st.params[static_cast<std::size_t>(t - 1)] - gtp->vectors.col(i - 1)).squaredNorm();
      if (T >= 2) {
        double f = 0;
        for (int i = 1; i < T; ++i) f += out.errors(i - 1, T - 1) - out.errors(i - 1, i - 1);
        out.F = f / (T - 1);
      }
      double gsum = 0;
      for (int i = 1; i <= T; ++i) gsum += out.errors(i - 1, T - 1);
      out.G = gsum / T;
      out.realized = st.realized_sim;
    }
  });

  std::vector<run_result> results;
  results.reserve(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    run_result r;
    r.strategy = to_string(specs[static_cast<std::size_t>(s)].kind);
    r.trials = trials;
    std::vector<double> fs, gs;
    fs.reserve(static_cast<std::size_t>(trials));
    gs.reserve(static_cast<std::size_t>(trials));
    std::vector<std::vector<std::vector<double>>> per_entry(
        static_cast<std::size_t>(T), std::vector<std::vector<double>>(static_cast<std::size_t>(T)));
    for (long k = 0; k < trials; ++k) {
      const auto& out = slots[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
      if (out.failed) {
        r.failures += 1;
        continue;
      }
      fs.push_back(out.F);
      gs.push_back(out.G);
      for (int i = 0; i < T; ++i)
        for (int t = 0; t < T; ++t)
          per_entry[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)].push_back(
              out.errors(i, t));
      if (specs[static_cast<std::size_t>(s)].kind == strategy_kind::hybrid)
        r.realized_sim.push_back(out.realized);
    }
    if (r.failures * 100 > trials) throw too_many_degenerate_draws(r.failures, trials);
    r.F = mc_detail::summarize(fs);
    r.G = mc_detail::summarize(gs);
    r.error_table.resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      r.error_table[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t)
        r.error_table[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
            mc_detail::summarize(per_entry[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]);
    }
    if (opts.keep_samples) {
      r.F_samples = std::move(fs);
      r.G_samples = std::move(gs);
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline run_result run_trials(const problem_config& cfg, const ground_truth_set& gt,
                             const strategy_spec& spec, long trials, std::uint64_t seed,
                             const mc_options& opts = {}) {
  return run_trials_multi(cfg, gt, {spec}, trials, seed, opts)[0];
}

// ---------------------------------------------------------------------------
// random-matrix identity checks
// ---------------------------------------------------------------------------

struct identity_row {
  std::string name;
  int m = 0;
  double analytic = 0;
  double empirical = 0;
  double std_error = 0;
  double z = 0;
};

struct identity_report {
  std::vector<identity_row> rows;
  double max_abs_z = 0;
};

namespace mc_detail {

inline identity_row identity_case(const std::string& name, int m, double analytic, long trials,
                                  std::uint64_t seed, int workers,
                                  const std::function<double(rng&)>& draw) {
  std::vector<double> xs(static_cast<std::size_t>(trials));
  parallel_for(trials, workers, [&](long k) {
    rng g = rng::for_stream(seed, stream::scratch, static_cast<std::uint64_t>(k));
    xs[static_cast<std::size_t>(k)] = draw(g);
  });
  const estimate_with_error e = summarize(xs);
  identity_row row;
  row.name = name;
  row.m = m;
  row.analytic = analytic;
  row.empirical = e.mean;
  row.std_error = e.std_error;
  row.z = e.std_error > 0 ? (e.mean - analytic) / e.std_error : 0.0;
  return row;
}

inline double quad_solve(const Eigen::MatrixXd& V, const Eigen::VectorXd& b1,
                         const Eigen::VectorXd& b2) {
  const Eigen::MatrixXd gram = V.transpose() * V;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  return b1.dot(llt.solve(b2));
}

}  // namespace mc_detail

// Monte Carlo checks of the expectation identities used throughout the
// closed-form derivations: projections, pseudo-inverse noise, zero-padded
// blocks, and the block inner product.
inline identity_report verify_identities(int p, const std::vector<int>& m_list, long trials,
                                         std::uint64_t seed, int workers = 0) {
  identity_report rep;
  std::uint64_t salt = 0;
  for (int m : m_list) {
    const int m3 = std::max(1, m / 2);
    if (p <= 2 * m + m3 + 1)
      throw denominator_domain("block identities need p > m1 + m2 + m3 + 1");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    v[0] = 1.0;
    Eigen::VectorXd v2 = Eigen::VectorXd::Zero(p);
    v2[0] = 1.0 / std::sqrt(2.0);
    v2[1] = 1.0 / std::sqrt(2.0);

    // E |P_X v|^2 = (m/p) |v|^2
    rep.rows.push_back(mc_detail::identity_case(
        "projection", m, double(m) / p, trials, derive_seed(seed, salt++), workers,
        [&, m](rng& g) {
          Eigen::MatrixXd X(p, m);
          g.fill_gaussian(X);
          const Eigen::VectorXd b = X.transpose() * v;
          return mc_detail::quad_solve(X, b, b);
        }));

    // E |X^dag z|^2 = m sigma^2 / (p - m - 1), sigma = 1
    rep.rows.push_back(mc_detail::identity_case(
        "pseudo_inverse_noise", m, double(m) / (p - m - 1.0), trials, derive_seed(seed, salt++),
        workers, [&, m](rng& g) {
          Eigen::MatrixXd X(p, m);
          g.fill_gaussian(X);
          Eigen::VectorXd z(m);
          g.fill_gaussian(z);
          return mc_detail::quad_solve(X, z, z);
        }));

    // E |V^dag [X1^T v; 0]|^2 = (m1/p)(1 + m2/(p - m1 - m2 - 1)) |v|^2
    rep.rows.push_back(mc_detail::identity_case(
        "zero_block_norm", m, double(m) / p * (1.0 + double(m) / (p - 2.0 * m - 1.0)), trials,
        derive_seed(seed, salt++), workers, [&, m](rng& g) {
          Eigen::MatrixXd V(p, 2 * m);
          g.fill_gaussian(V);
          Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * m);
          b.head(m) = V.leftCols(m).transpose() * v;
          return mc_detail::quad_solve(V, b, b);
        }));

    // E v1^T V1 (V^T V)^{-1} V2^T v2, three blocks, distinct v1 and v2
    {
      const double num = (v - v2).squaredNorm() - v.squaredNorm() - v2.squaredNorm();
      const double analytic = double(m) * m * num / (2.0 * p * (p - 2.0 * m - m3 - 1.0));
      rep.rows.push_back(mc_detail::identity_case(
          "block_inner_product", m, analytic, trials, derive_seed(seed, salt++), workers,
          [&, m, m3](rng& g) {
            Eigen::MatrixXd V(p, 2 * m + m3);
            g.fill_gaussian(V);
            Eigen::VectorXd b1 = Eigen::VectorXd::Zero(2 * m + m3);
            Eigen::VectorXd b2 = Eigen::VectorXd::Zero(2 * m + m3);
            b1.head(m) = V.leftCols(m).transpose() * v;
            b2.segment(m, m) = V.middleCols(m, m).transpose() * v2;
            return mc_detail::quad_solve(V, b1, b2);
          }));
    }

    // same identity with v1 = v2 = v and no third block:
    // E = -m1 m2 |v|^2 / (p (p - m1 - m2 - 1))
    rep.rows.push_back(mc_detail::identity_case(
        "block_inner_product_equal_v", m, -double(m) * m / (p * (p - 2.0 * m - 1.0)), trials,
        derive_seed(seed, salt++), workers, [&, m](rng& g) {
          Eigen::MatrixXd V(p, 2 * m);
          g.fill_gaussian(V);
          Eigen::VectorXd b1 = Eigen::VectorXd::Zero(2 * m);
          Eigen::VectorXd b2 = Eigen::VectorXd::Zero(2 * m);
          b1.head(m) = V.leftCols(m).transpose() * v;
          b2.tail(m) = V.rightCols(m).transpose() * v;
          return mc_detail::quad_solve(V, b1, b2);
        }));
  }
  for (const auto& row : rep.rows) rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
  return rep;
}

// ---------------------------------------------------------------------------
// parameter sweeps
// ---------------------------------------------------------------------------

enum class sweep_axis { gap_sq, memory, dimension, sigma };

inline const char* to_string(sweep_axis a) {
  switch (a) {
    case sweep_axis::gap_sq: return "gap_sq";
    case sweep_axis::memory: return "M";
    case sweep_axis::dimension: return "p";
    default: return "sigma";
  }
}

inline sweep_axis sweep_axis_from_string(const std::string& s) {
  if (s == "gap_sq") return sweep_axis::gap_sq;
  if (s == "M") return sweep_axis::memory;
  if (s == "p") return sweep_axis::dimension;
  if (s == "sigma") return sweep_axis::sigma;
  throw config_invalid("axis", "unknown sweep axis '" + s + "'");
}

// partitions implied by a rule that does not look at drawn data
inline std::optional<theory_partitions> static_partitions(const strategy_spec& spec,
                                                          const ground_truth_set& gt, int T) {
  if (spec.kind != strategy_kind::hybrid) return std::nullopt;
  theory_partitions parts;
  switch (spec.partition.mode) {
    case partition_rule::mode_t::explicit_sets:
      parts.sim = spec.partition.explicit_sim;
      parts.validate(T);
      return parts;
    case partition_rule::mode_t::gap_threshold:
      for (int t = 2; t <= T; ++t) {
        std::vector<int> sim;
        for (int h = 1; h < t; ++h)
          if (!(gt.gap(h, t) > spec.partition.gap_tau)) sim.push_back(h);
        parts.sim.push_back(std::move(sim));
      }
      return parts;
    case partition_rule::mode_t::gradient_cosine:
      return std::nullopt;  // data dependent; handled per realized trial
  }
  return std::nullopt;
}

// theory value for one strategy: data-independent rules evaluate once,
// gradient_cosine averages the prediction over the realized partitions
inline std::pair<double, double> theory_for(const problem_config& cfg,
                                            const ground_truth_set& gt,
                                            const strategy_spec& spec,
                                            const run_result* realized) {
  const ground_truth_view view = ground_truth_view::of(gt);
  if (spec.kind != strategy_kind::hybrid) {
    const theory_prediction pred = predict_recursive(cfg, view, spec.kind);
    return {pred.F, pred.G};
  }
  if (auto parts = static_partitions(spec, gt, cfg.T)) {
    const theory_prediction pred = predict_recursive(cfg, view, spec.kind, &*parts);
    return {pred.F, pred.G};
  }
  if (realized == nullptr || realized->realized_sim.empty())
    throw partition_invalid("gradient_cosine theory needs realized partitions from a run");
  mc_detail::neumaier_sum f, g;
  for (const auto& realized_sets : realized->realized_sim) {
    const theory_partitions parts = theory_partitions::from_realized(realized_sets);
    const theory_prediction pred = predict_recursive(cfg, view, spec.kind, &parts);
    f.add(pred.F);
    g.add(pred.G);
  }
  const double count = static_cast<double>(realized->realized_sim.size());
  return {f.value() / count, g.value() / count};
}

struct sweep_series {
  std::string strategy;
  std::vector<estimate_with_error> F, G;
  std::vector<double> theory_F, theory_G;
};

struct sweep_result {
  std::string axis;
  std::vector<double> grid;
  std::vector<bool> skipped;
  std::vector<std::string> skip_reason;
  std::vector<sweep_series> series;
  // empirical crossover of (F_conc - F_seq) and (G_conc - G_seq), when both
  // strategies were swept and a sign change exists
  std::optional<double> crossover_F;
  std::optional<double> crossover_G;
  problem_config base_cfg;
  ground_truth_kind gt_kind = ground_truth_kind::equal_gap;
  double base_gap_sq = 1.0;
  std::uint64_t geometry_seed = 0;
  std::uint64_t master_seed = 0;
  long trials = 0;
};

inline std::optional<double> locate_sign_change(const std::vector<double>& xs,
                                                const std::vector<double>& diff,
                                                const std::vector<bool>& skipped) {
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (skipped[i]) continue;
    if (prev && diff[*prev] != 0 && diff[i] != 0 && (diff[*prev] < 0) != (diff[i] < 0)) {
      const double x0 = xs[*prev], x1 = xs[i], d0 = diff[*prev], d1 = diff[i];
      return x0 + (x1 - x0) * (-d0) / (d1 - d0);
    }
    prev = i;
  }
  return std::nullopt;
}

inline sweep_result sweep(const problem_config& cfg_base, sweep_axis axis,
                          const std::vector<double>& grid,
                          const std::vector<strategy_spec>& specs, long trials,
                          std::uint64_t master_seed, ground_truth_kind gt_kind,
                          double base_gap_sq, std::uint64_t geometry_seed,
                          const mc_options& opts = {}) {
  sweep_result out;
  out.axis = to_string(axis);
  out.grid = grid;
  out.base_cfg = cfg_base;
  out.gt_kind = gt_kind;
  out.base_gap_sq = base_gap_sq;
  out.geometry_seed = geometry_seed;
  out.master_seed = master_seed;
  out.trials = trials;
  out.skipped.assign(grid.size(), false);
  out.skip_reason.assign(grid.size(), "");
  for (const auto& spec : specs) {
    sweep_series s;
    s.strategy = to_string(spec.kind);
    out.series.push_back(std::move(s));
  }

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    problem_config cfg = cfg_base;
    double gap = base_gap_sq;
    switch (axis) {
      case sweep_axis::gap_sq: gap = grid[gi]; break;
      case sweep_axis::memory: cfg.M = static_cast<int>(grid[gi]); break;
      case sweep_axis::dimension: cfg.p = static_cast<int>(grid[gi]); break;
      case sweep_axis::sigma: cfg.sigma = grid[gi]; break;
    }
    auto mark_skipped = [&](const std::string& why) {
      out.skipped[gi] = true;
      out.skip_reason[gi] = why;
      for (auto& s : out.series) {
        s.F.push_back({});
        s.G.push_back({});
        s.theory_F.push_back(std::numeric_limits<double>::quiet_NaN());
        s.theory_G.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    };
    if (cfg.p <= cfg.n + cfg.M + 1) {
      mark_skipped("p <= n + M + 1");
      continue;
    }
    ground_truth_set gt;
    try {
      gt = generate_ground_truth(gt_kind, cfg.T, cfg.p, gap, geometry_seed);
    } catch (const error& e) {
      mark_skipped(e.what());
      continue;
    }
    const std::uint64_t point_seed = derive_seed(master_seed, gi);
    const std::vector<run_result> runs = run_trials_multi(cfg, gt, specs, trials, point_seed, opts);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const auto [tf, tg] = theory_for(cfg, gt, specs[s], &runs[s]);
      out.series[s].F.push_back(runs[s].F);
      out.series[s].G.push_back(runs[s].G);
      out.series[s].theory_F.push_back(tf);
      out.series[s].theory_G.push_back(tg);
    }
  }

  // empirical crossover between the first concurrent and sequential series
  const sweep_series* conc = nullptr;
  const sweep_series* seq = nullptr;
  for (const auto& s : out.series) {
    if (!conc && s.strategy == "concurrent") conc = &s;
    if (!seq && s.strategy == "sequential") seq = &s;
  }
  if (conc && seq) {
    std::vector<double> fdiff(grid.size(), 0), gdiff(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (out.skipped[i]) continue;
      fdiff[i] = conc->F[i].mean - seq->F[i].mean;
      gdiff[i] = conc->G[i].mean - seq->G[i].mean;
    }
    out.crossover_F = locate_sign_change(grid, fdiff, out.skipped);
    out.crossover_G = locate_sign_change(grid, gdiff, out.skipped);
  }
  return out;
}

}  // namespace rehearsal
