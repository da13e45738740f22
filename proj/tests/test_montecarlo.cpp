#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/theory.hpp"

using namespace rehearsal;

namespace {

problem_config paper_cfg() {
  problem_config cfg;
  cfg.T = 5;
  cfg.p = 500;
  cfg.n = 24;
  cfg.M = 24;
  cfg.sigma = 0;
  return cfg;
}

}  // namespace

TEST_CASE("estimates are deterministic and worker-count invariant") {
  auto cfg = paper_cfg();
  cfg.T = 3;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 3, cfg.p, 1.0, 3);
  strategy_spec spec;
  spec.kind = strategy_kind::concurrent;

  mc_options one;
  one.workers = 1;
  mc_options four;
  four.workers = 4;
  const auto a = run_trials(cfg, gt, spec, 64, 7, one);
  const auto b = run_trials(cfg, gt, spec, 64, 7, four);
  CHECK(a.F.mean == b.F.mean);
  CHECK(a.F.std_error == b.F.std_error);
  CHECK(a.G.mean == b.G.mean);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 3; ++t) {
      CHECK(a.error_table[i][t].mean == b.error_table[i][t].mean);
      CHECK(a.error_table[i][t].std_error == b.error_table[i][t].std_error);
    }

  const auto c = run_trials(cfg, gt, spec, 64, 8, one);
  CHECK(a.F.mean != c.F.mean);  // different master seed, different draws
}

TEST_CASE("trial count below two is rejected") {
  auto cfg = paper_cfg();
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 5, cfg.p, 1.0, 3);
  strategy_spec spec;
  CHECK_THROWS_AS(run_trials(cfg, gt, spec, 1, 7, {}), config_invalid);
}

TEST_CASE("quadrupling trials roughly halves the standard error") {
  auto cfg = paper_cfg();
  cfg.T = 2;
  cfg.p = 120;
  cfg.n = 10;
  cfg.M = 10;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 2, cfg.p, 1.0, 5);
  strategy_spec spec;
  const auto small = run_trials(cfg, gt, spec, 500, 11, {});
  const auto large = run_trials(cfg, gt, spec, 2000, 11, {});
  const double ratio = small.G.std_error / large.G.std_error;
  CHECK(std::abs(ratio - 2.0) < 0.4);
}

TEST_CASE("empirical means track theory at the simulation configuration") {
  auto cfg = paper_cfg();
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 5, cfg.p, 1.0, 21);
  const ground_truth_view view = ground_truth_view::of(gt);
  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;
  const auto runs = run_trials_multi(cfg, gt, {conc, seq}, 1000, 31, {});
  const auto pc = predict_recursive(cfg, view, strategy_kind::concurrent);
  const auto ps = predict_recursive(cfg, view, strategy_kind::sequential);
  CHECK(std::abs(runs[0].F.mean - pc.F) <= 3 * runs[0].F.std_error);
  CHECK(std::abs(runs[0].G.mean - pc.G) <= 3 * runs[0].G.std_error);
  CHECK(std::abs(runs[1].F.mean - ps.F) <= 3 * runs[1].F.std_error);
  CHECK(std::abs(runs[1].G.mean - ps.G) <= 3 * runs[1].G.std_error);
}

TEST_CASE("large gaps favor sequential rehearsal by a wide margin") {
  auto cfg = paper_cfg();
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 5, cfg.p, 1.6, 22);
  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;
  const auto runs = run_trials_multi(cfg, gt, {conc, seq}, 400, 33, {});
  const double combined_F =
      std::sqrt(runs[0].F.std_error * runs[0].F.std_error + runs[1].F.std_error * runs[1].F.std_error);
  CHECK(runs[0].F.mean - runs[1].F.mean > 3 * combined_F);
}

TEST_CASE("identity suite: all z-scores under four") {
  const auto rep = verify_identities(100, {10, 20}, 10000, 777);
  for (const auto& row : rep.rows) {
    INFO(row.name, " m=", row.m, " z=", row.z);
    CHECK(std::abs(row.z) < 4.0);
  }
  CHECK(rep.rows.size() == 10);  // five identities at two block sizes

  // spot-check the analytic targets themselves
  for (const auto& row : rep.rows) {
    if (row.name == "projection" && row.m == 20) CHECK(row.analytic == doctest::Approx(0.2));
    if (row.name == "pseudo_inverse_noise" && row.m == 20)
      CHECK(row.analytic == doctest::Approx(20.0 / 79.0));
    if (row.name == "block_inner_product_equal_v" && row.m == 10)
      CHECK(row.analytic == doctest::Approx(-100.0 / (100.0 * 79.0)));
  }
}

TEST_CASE("sweep records crossover and skips invalid points") {
  auto cfg = paper_cfg();
  cfg.T = 3;
  cfg.p = 150;
  cfg.n = 12;
  cfg.M = 12;
  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;

  const std::vector<double> grid{0.05, 0.5, 1.0, 1.6, 2.2};
  const auto res = sweep(cfg, sweep_axis::gap_sq, grid, {conc, seq}, 300, 99,
                         ground_truth_kind::equal_gap, 1.0, 4, {});
  REQUIRE(res.series.size() == 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK_FALSE(res.skipped[i]);
    for (const auto& ser : res.series) CHECK(std::isfinite(ser.theory_F[i]));
  }
  CHECK(res.crossover_F.has_value());
  CHECK(res.crossover_G.has_value());

  // a memory sweep hitting p <= n + M + 1 skips the offending point
  const std::vector<double> mgrid{0, 60, 140};
  const auto mres = sweep(cfg, sweep_axis::memory, mgrid, {conc, seq}, 50, 99,
                          ground_truth_kind::equal_gap, 1.0, 4, {});
  CHECK_FALSE(mres.skipped[0]);
  CHECK_FALSE(mres.skipped[1]);
  CHECK(mres.skipped[2]);
  CHECK(mres.skip_reason[2] == "p <= n + M + 1");

  // M = 0 endpoint: the strategies coincide within noise (same data => same fits)
  CHECK(mres.series[0].F[0].mean == mres.series[1].F[0].mean);
}

TEST_CASE("memoryless sweep endpoint is identical across strategies") {
  auto cfg = paper_cfg();
  cfg.T = 3;
  cfg.M = 0;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 3, cfg.p, 0.8, 13);
  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  strategy_spec seq;
  seq.kind = strategy_kind::sequential;
  const auto runs = run_trials_multi(cfg, gt, {conc, seq}, 100, 5, {});
  CHECK(runs[0].F.mean == runs[1].F.mean);
  CHECK(runs[0].G.mean == runs[1].G.mean);
}

TEST_CASE("p sweep sends forgetting to zero") {
  // the 1/p decay sets in around p = 1e3 for this configuration
  auto cfg = paper_cfg();
  strategy_spec conc;
  conc.kind = strategy_kind::concurrent;
  const std::vector<double> pgrid{1000, 4000, 16000};
  const auto res = sweep(cfg, sweep_axis::dimension, pgrid, {conc}, 100, 17,
                         ground_truth_kind::equal_gap, 1.0, 6, {});
  for (std::size_t i = 1; i < pgrid.size(); ++i) {
    CHECK(std::abs(res.series[0].theory_F[i]) < std::abs(res.series[0].theory_F[i - 1]));
    CHECK(std::abs(res.series[0].F[i].mean) <
          std::abs(res.series[0].F[i - 1].mean) + 3 * res.series[0].F[i - 1].std_error);
  }
}

TEST_CASE("redrawing the geometry per trial changes the estimate") {
  auto cfg = paper_cfg();
  cfg.T = 2;
  cfg.p = 100;
  cfg.n = 8;
  cfg.M = 8;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 2, cfg.p, 1.0, 9);
  strategy_spec spec;
  const auto fixed = run_trials(cfg, gt, spec, 100, 3, {});
  mc_options opts;
  opts.regenerate_geometry = [&](long trial) {
    return generate_ground_truth(ground_truth_kind::equal_gap, 2, cfg.p, 1.0,
                                 derive_seed(9, static_cast<std::uint64_t>(trial)));
  };
  const auto redrawn = run_trials(cfg, gt, spec, 100, 3, opts);
  CHECK(fixed.G.mean != redrawn.G.mean);
}

TEST_CASE("hybrid sweeps carry theory through realized partitions") {
  auto cfg = paper_cfg();
  cfg.T = 3;
  cfg.p = 150;
  cfg.n = 12;
  cfg.M = 12;
  strategy_spec hyb;
  hyb.kind = strategy_kind::hybrid;
  hyb.partition.mode = partition_rule::mode_t::gradient_cosine;
  hyb.partition.tau = 0.0;
  const auto gt = generate_ground_truth(ground_truth_kind::equal_gap, 3, cfg.p, 1.0, 5);
  mc_options opts;
  const auto run = run_trials(cfg, gt, hyb, 200, 23, opts);
  REQUIRE(run.realized_sim.size() == 200);
  const auto [tf, tg] = theory_for(cfg, gt, hyb, &run);
  CHECK(std::abs(run.F.mean - tf) <= 4 * run.F.std_error);
  CHECK(std::abs(run.G.mean - tg) <= 4 * run.G.std_error);

  // gap-threshold partitions are static: theory needs no realized sets
  strategy_spec hyb2 = hyb;
  hyb2.partition.mode = partition_rule::mode_t::gap_threshold;
  hyb2.partition.gap_tau = 0.5;
  const auto [tf2, tg2] = theory_for(cfg, gt, hyb2, nullptr);
  CHECK(std::isfinite(tf2));
  CHECK(std::isfinite(tg2));
}
