// Operator entry point: closed-form predictions, Monte Carlo simulation,
// parameter sweeps with figures, and the verification suites.
//
// Exit codes: 0 success, 2 config error, 3 runtime degeneracy,
// 4 verification failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rehearsal/config.hpp"
#include "rehearsal/io.hpp"
#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/svg.hpp"
#include "rehearsal/theory.hpp"
#include "rehearsal/verifier.hpp"

namespace fs = std::filesystem;
using namespace rehearsal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitVerification = 4;

struct cli_overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<int> workers;
  std::string out_dir;
  std::string format;
};

run_config load_config(const cli_overrides& ov, const char* command) {
  run_config rc;
  if (!ov.config_path.empty()) rc = parse_run_config(read_text_file(ov.config_path));
  if (ov.seed) rc.seed = *ov.seed;
  if (ov.trials) rc.trials = *ov.trials;
  if (ov.workers) rc.workers = *ov.workers;
  if (!ov.format.empty()) {
    if (ov.format != "csv" && ov.format != "json")
      throw config_invalid("format", "expect csv or json");
    rc.format = ov.format;
  }
  if (!ov.out_dir.empty()) rc.out_dir = ov.out_dir;
  if (rc.out_dir.empty()) {
    const char* root = std::getenv("REHEARSAL_OUT_ROOT");
    rc.out_dir = (fs::path(root ? root : "out") /
                  (std::string(command) + "-seed" + std::to_string(rc.seed)))
                     .string();
  }
  rc.problem.validate();
  if (rc.trials < 2) throw config_invalid("run.trials", "need trials >= 2 for a defined std error");
  return rc;
}

// every output directory carries the resolved config, the tool version and
// the master seed so a rerun reproduces it byte for byte
void write_run_stamp(const fs::path& dir, const run_config& rc) {
  fs::create_directories(dir);
  write_text_file(dir / "resolved_config.ini", serialize_run_config(rc));
  std::string info = std::string(kToolName) + " " + kToolVersion + "\n";
  info += "master_seed = " + std::to_string(rc.seed) + "\n";
  info += "geometry_seed = " + std::to_string(rc.geometry_seed) + "\n";
  write_text_file(dir / "run_info.txt", info);
}

strategy_spec spec_for(const run_config& rc, strategy_kind kind) {
  strategy_spec spec;
  spec.kind = kind;
  spec.order = rc.order;
  spec.partition = rc.partition;
  return spec;
}

int cmd_theory(const cli_overrides& ov) {
  const run_config rc = load_config(ov, "theory");
  const fs::path dir(rc.out_dir);
  write_run_stamp(dir, rc);

  const double effective_gap =
      rc.gt_kind == ground_truth_kind::orthonormal ? 2.0 : rc.gap_sq;
  const ground_truth_view view = ground_truth_view::equal_gap(rc.problem.T, effective_gap);

  nlohmann::json out;
  out["config"] = to_json(rc.problem);
  out["gap_sq"] = effective_gap;
  nlohmann::json tables = nlohmann::json::array();

  std::cout << "strategy      F_T                      G_T\n";
  for (strategy_kind kind : rc.strategies) {
    std::optional<theory_partitions> parts;
    if (kind == strategy_kind::hybrid) {
      if (rc.partition.mode == partition_rule::mode_t::explicit_sets) {
        parts.emplace();
        parts->sim = rc.partition.explicit_sim;
      } else if (rc.partition.mode == partition_rule::mode_t::gap_threshold) {
        parts.emplace();
        for (int t = 2; t <= rc.problem.T; ++t) {
          std::vector<int> sim;
          for (int h = 1; h < t; ++h)
            if (!(effective_gap > rc.partition.gap_tau)) sim.push_back(h);
          parts->sim.push_back(sim);
        }
      } else {
        throw config_invalid("strategy.partition_mode",
                             "theory mode needs explicit or gap_threshold partitions");
      }
    }
    const theory_prediction pred =
        predict_recursive(rc.problem, view, kind, parts ? &*parts : nullptr);
    const coefficient_table tab =
        predict_coefficients(rc.problem, kind, parts ? &*parts : nullptr);
    const theory_prediction assembled = assemble_from_coefficients(tab, view, rc.problem.sigma);

    std::printf("%-12s  %-23s  %-23s\n", to_string(kind), format_double(pred.F).c_str(),
                format_double(pred.G).c_str());
    nlohmann::json entry = table_to_json(tab, rc.problem.sigma);
    entry["F"] = pred.F;
    entry["G"] = pred.G;
    entry["F_from_table"] = assembled.F;
    entry["G_from_table"] = assembled.G;
    tables.push_back(entry);
  }
  out["tables"] = tables;
  write_text_file(dir / "theory.json", out.dump(2) + "\n");
  std::cout << "wrote " << (dir / "theory.json").string() << "\n";
  return kExitOk;
}

std::vector<result_row> result_rows(double axis_value, const std::vector<run_result>& runs,
                                    const std::vector<std::pair<double, double>>& theory) {
  std::vector<result_row> rows;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    rows.push_back({axis_value, runs[s].strategy, "F", runs[s].F.mean, runs[s].F.std_error,
                    theory[s].first, runs[s].F.trials});
    rows.push_back({axis_value, runs[s].strategy, "G", runs[s].G.mean, runs[s].G.std_error,
                    theory[s].second, runs[s].G.trials});
  }
  return rows;
}

int cmd_simulate(const cli_overrides& ov) {
  const run_config rc = load_config(ov, "simulate");
  const fs::path dir(rc.out_dir);
  write_run_stamp(dir, rc);

  const ground_truth_set gt = generate_ground_truth(
      rc.gt_kind, rc.problem.T, rc.problem.p,
      rc.gt_kind == ground_truth_kind::orthonormal ? 2.0 : rc.gap_sq, rc.geometry_seed);

  std::vector<strategy_spec> specs;
  specs.reserve(rc.strategies.size());
  for (strategy_kind k : rc.strategies) specs.push_back(spec_for(rc, k));

  mc_options opts;
  opts.workers = rc.workers;
  const std::vector<run_result> runs =
      run_trials_multi(rc.problem, gt, specs, rc.trials, rc.seed, opts);

  std::vector<std::pair<double, double>> theory;
  theory.reserve(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s)
    theory.push_back(theory_for(rc.problem, gt, specs[s], &runs[s]));

  const auto rows = result_rows(rc.gap_sq, runs, theory);
  write_text_file(dir / "results.csv", to_csv(rows));

  nlohmann::json j;
  j["config"] = to_json(rc.problem);
  j["gap_sq"] = rc.gap_sq;
  j["master_seed"] = rc.seed;
  j["geometry_seed"] = rc.geometry_seed;
  j["trials"] = rc.trials;
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t s = 0; s < runs.size(); ++s) {
    nlohmann::json e;
    e["strategy"] = runs[s].strategy;
    e["F"] = to_json(runs[s].F);
    e["G"] = to_json(runs[s].G);
    e["theory_F"] = theory[s].first;
    e["theory_G"] = theory[s].second;
    e["failures"] = runs[s].failures;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : runs[s].error_table) {
      nlohmann::json jr = nlohmann::json::array();
      for (const auto& cell : row) jr.push_back(to_json(cell));
      table.push_back(jr);
    }
    e["error_table"] = table;
    results.push_back(e);
  }
  j["results"] = results;
  write_text_file(dir / "results.json", j.dump(2) + "\n");

  for (const auto& row : rows)
    std::cout << row.strategy << " " << row.metric << ": " << format_double(row.empirical_mean)
              << " +- " << format_double(row.std_error) << "  (theory "
              << format_double(row.theory_value) << ")\n";
  std::cout << "wrote " << (dir / "results.csv").string() << "\n";
  return kExitOk;
}

int cmd_sweep(const cli_overrides& ov) {
  const run_config rc = load_config(ov, "sweep");
  if (rc.grid.empty()) throw config_invalid("sweep.grid", "sweep needs a grid");
  const fs::path dir(rc.out_dir);
  write_run_stamp(dir, rc);

  std::vector<strategy_spec> specs;
  specs.reserve(rc.strategies.size());
  for (strategy_kind k : rc.strategies) specs.push_back(spec_for(rc, k));

  mc_options opts;
  opts.workers = rc.workers;
  const sweep_result res = sweep(rc.problem, rc.axis, rc.grid, specs, rc.trials, rc.seed,
                                 rc.gt_kind, rc.gap_sq, rc.geometry_seed, opts);

  std::vector<result_row> rows;
  for (std::size_t i = 0; i < res.grid.size(); ++i) {
    if (res.skipped[i]) continue;
    for (const auto& ser : res.series) {
      rows.push_back({res.grid[i], ser.strategy, "F", ser.F[i].mean, ser.F[i].std_error,
                      ser.theory_F[i], ser.F[i].trials});
      rows.push_back({res.grid[i], ser.strategy, "G", ser.G[i].mean, ser.G[i].std_error,
                      ser.theory_G[i], ser.G[i].trials});
    }
  }
  write_text_file(dir / "results.csv", to_csv(rows));
  write_text_file(dir / "figure.svg", sweep_svg(res));
  write_text_file(dir / "figure.dat", sweep_dat(res));

  nlohmann::json j;
  j["config"] = to_json(rc.problem);
  j["axis"] = res.axis;
  j["grid"] = res.grid;
  j["master_seed"] = rc.seed;
  j["geometry_seed"] = rc.geometry_seed;
  j["trials"] = rc.trials;
  if (res.crossover_F) j["crossover_F"] = *res.crossover_F;
  if (res.crossover_G) j["crossover_G"] = *res.crossover_G;
  nlohmann::json skipped = nlohmann::json::array();
  for (std::size_t i = 0; i < res.grid.size(); ++i)
    if (res.skipped[i])
      skipped.push_back({{"axis_value", res.grid[i]}, {"reason", res.skip_reason[i]}});
  j["skipped_points"] = skipped;
  write_text_file(dir / "results.json", j.dump(2) + "\n");

  if (res.crossover_F)
    std::cout << "empirical F crossover near " << format_double(*res.crossover_F) << "\n";
  if (res.crossover_G)
    std::cout << "empirical G crossover near " << format_double(*res.crossover_G) << "\n";
  std::cout << "wrote " << (dir / "figure.svg").string() << "\n";
  return kExitOk;
}

int cmd_verify(const cli_overrides& ov, const std::string& suite) {
  const run_config rc = load_config(ov, "verify");
  const fs::path dir(rc.out_dir);
  write_run_stamp(dir, rc);

  bool ok = true;
  std::string text;
  nlohmann::json j;

  const bool do_lemmas = suite == "lemmas" || suite == "all";
  const bool do_theorems = suite == "theorems" || suite == "all";
  const bool do_identities = suite == "identities" || suite == "all";
  if (!do_lemmas && !do_theorems && !do_identities)
    throw config_invalid("suite", "expect lemmas, theorems, identities or all");

  if (do_lemmas) {
    const check_report rep = check_scalar_lemmas();
    ok &= rep.failed == 0;
    text += "scalar lemmas: asserted " + std::to_string(rep.asserted) + ", passed " +
            std::to_string(rep.passed) + ", failed " + std::to_string(rep.failed) +
            ", marginal " + std::to_string(rep.marginal) + ", skipped " +
            std::to_string(rep.skipped) + "\n";
    for (const auto& pt : rep.points) {
      if (!pt.asserted || (pt.passed && !pt.marginal)) continue;
      text += "  flagged: lemma=" +
              scalar_lemma_names()[static_cast<std::size_t>(pt.params.at("lemma"))];
      for (const auto& [k, v] : pt.params)
        if (k != "lemma") text += " " + k + "=" + format_double(v);
      text += std::string(" margin=") + format_double(pt.margin) +
              (pt.marginal ? " (marginal)" : " (FAILED)") + "\n";
    }
    j["lemmas"] = report_to_json(rep);
  }
  if (do_theorems) {
    const check_report rep = check_theorems();
    ok &= rep.failed == 0;
    text += "theorems: asserted " + std::to_string(rep.asserted) + ", passed " +
            std::to_string(rep.passed) + ", failed " + std::to_string(rep.failed) +
            ", marginal " + std::to_string(rep.marginal) + "\n";
    j["theorems"] = report_to_json(rep);
  }
  if (do_identities) {
    const identity_report rep = verify_identities(100, {10, 20}, 10000, rc.seed, rc.workers);
    ok &= rep.max_abs_z < 4.0;
    text += "identities: max |z| = " + format_double(rep.max_abs_z) + " over " +
            std::to_string(rep.rows.size()) + " checks\n";
    for (const auto& row : rep.rows)
      text += "  " + row.name + " m=" + std::to_string(row.m) + ": empirical " +
              format_double(row.empirical) + " vs analytic " + format_double(row.analytic) +
              " (z = " + format_double(row.z) + ")\n";
    j["identities"] = identities_to_json(rep);
  }

  write_text_file(dir / "report.txt", text);
  write_text_file(dir / "report.json", j.dump(2) + "\n");
  std::cout << text;
  std::cout << (ok ? "VERIFY PASS\n" : "VERIFY FAIL\n");
  return ok ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rehearsal: simulator and closed-form calculator for rehearsal strategies in "
               "overparameterized linear continual learning"};
  app.require_subcommand(1);

  cli_overrides ov;
  std::string suite = "all";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", ov.config_path, "config file (ini)");
    cmd->add_option("--seed", ov.seed, "master seed override");
    cmd->add_option("--trials", ov.trials, "trial count override");
    cmd->add_option("--workers", ov.workers, "worker count (0 = hardware)");
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--format", ov.format, "csv or json");
  };

  CLI::App* theory = app.add_subcommand("theory", "closed-form F/G predictions and tables");
  add_common(theory);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimates at one point");
  add_common(simulate);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep an axis; CSV + SVG figure");
  add_common(sweep_cmd);
  CLI::App* verify = app.add_subcommand("verify", "lemma/theorem/identity verification suites");
  add_common(verify);
  verify->add_option("--suite", suite, "lemmas | theorems | identities | all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (theory->parsed()) return cmd_theory(ov);
    if (simulate->parsed()) return cmd_simulate(ov);
    if (sweep_cmd->parsed()) return cmd_sweep(ov);
    if (verify->parsed()) return cmd_verify(ov, suite);
  } catch (const config_invalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const too_many_degenerate_draws& e) {
    std::cerr << "degenerate run: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
