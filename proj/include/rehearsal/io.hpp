#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rehearsal/errors.hpp"
#include "rehearsal/metrics.hpp"
#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/theory.hpp"
#include "rehearsal/trainers.hpp"
#include "rehearsal/verifier.hpp"

namespace rehearsal {

inline constexpr const char* kToolName = "rehearsal";
inline constexpr const char* kToolVersion = "0.1.0";

// floats are printed with 17 significant digits so reruns are byte identical
// and values round-trip exactly
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path.string() + " for writing");
  out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kResultCsvHeader =
    "axis_value,strategy,metric,empirical_mean,std_error,theory_value,trials";

struct result_row {
  double axis_value = 0;
  std::string strategy;
  std::string metric;  // "F" or "G"
  double empirical_mean = 0;
  double std_error = 0;
  double theory_value = 0;
  long trials = 0;
};

inline std::string to_csv(const std::vector<result_row>& rows) {
  std::string out = kResultCsvHeader;
  out += "\n";
  for (const auto& r : rows) {
    out += format_double(r.axis_value);
    out += ",";
    out += r.strategy;
    out += ",";
    out += r.metric;
    out += ",";
    out += format_double(r.empirical_mean);
    out += ",";
    out += format_double(r.std_error);
    out += ",";
    out += format_double(r.theory_value);
    out += ",";
    out += std::to_string(r.trials);
    out += "\n";
  }
  return out;
}

// columnar dump of a ground-truth set: header row names the dimensions,
// one row per coordinate, one column per task; seed recorded up front
inline std::string ground_truth_csv(const ground_truth_set& gt) {
  std::string out = "# kind=" + std::string(to_string(gt.kind)) +
                    " seed=" + std::to_string(gt.seed) + " p=" + std::to_string(gt.dim()) +
                    " T=" + std::to_string(gt.tasks()) + "\n";
  out += "coord";
  for (int t = 1; t <= gt.tasks(); ++t) out += ",w_star_" + std::to_string(t);
  out += "\n";
  for (int r = 0; r < gt.dim(); ++r) {
    out += std::to_string(r);
    for (int t = 0; t < gt.tasks(); ++t) out += "," + format_double(gt.vectors(r, t));
    out += "\n";
  }
  return out;
}

inline std::string dataset_csv(const task_dataset& d, std::uint64_t seed) {
  std::string out = "# source_task=" + std::to_string(d.source_task) +
                    " m=" + std::to_string(d.m) + " p=" + std::to_string(d.X.rows()) +
                    " seed=" + std::to_string(seed) + "\n";
  out += "sample";
  for (int r = 0; r < d.X.rows(); ++r) out += ",x_" + std::to_string(r);
  out += ",y\n";
  for (int c = 0; c < d.m; ++c) {
    out += std::to_string(c);
    for (int r = 0; r < d.X.rows(); ++r) out += "," + format_double(d.X(r, c));
    out += "," + format_double(d.Y(c));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const problem_config& cfg) {
  return {{"p", cfg.p}, {"n", cfg.n}, {"M", cfg.M}, {"T", cfg.T}, {"sigma", cfg.sigma}};
}

inline nlohmann::json to_json(const estimate_with_error& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"trials", e.trials}};
}

inline nlohmann::json trace_to_json(const train_trace& trace, bool include_params = false) {
  nlohmann::json j;
  j["config"] = to_json(trace.cfg);
  j["strategy"] = to_string(trace.spec.kind);
  j["seed"] = trace.seed;
  j["zero_gradient_warnings"] = trace.zero_gradient_warnings;
  nlohmann::json errs = nlohmann::json::array();
  for (int i = 0; i < trace.per_step_errors.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int t = 0; t < trace.per_step_errors.cols(); ++t) row.push_back(trace.per_step_errors(i, t));
    errs.push_back(row);
  }
  j["per_step_errors"] = errs;
  if (!trace.realized_sim.empty()) j["realized_similar_sets"] = trace.realized_sim;
  if (include_params) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& w : trace.params) {
      nlohmann::json row = nlohmann::json::array();
      for (int i = 0; i < w.size(); ++i) row.push_back(w[i]);
      params.push_back(row);
    }
    j["params"] = params;
  }
  return j;
}

// coefficient tables keyed by (strategy, i, j, k, t) for external diffing
inline nlohmann::json table_to_json(const coefficient_table& tab, double sigma) {
  nlohmann::json j;
  j["strategy"] = to_string(tab.strategy);
  j["config"] = to_json(tab.cfg);
  j["non_integer_allocation"] = tab.non_integer_allocation;
  nlohmann::json d0 = nlohmann::json::object();
  nlohmann::json noise = nlohmann::json::object();
  for (int t = 1; t <= tab.tasks(); ++t) {
    d0[std::to_string(t)] = tab.d_0t(t);
    noise[std::to_string(t)] = tab.noise_t(t, sigma);
  }
  j["d_0t"] = d0;
  j["noise_t"] = noise;
  nlohmann::json c_i = nlohmann::json::object();
  for (int i = 1; i < tab.tasks(); ++i) c_i[std::to_string(i)] = tab.c_i(i);
  j["c_i"] = c_i;
  nlohmann::json entries = nlohmann::json::array();
  for (int t = 1; t <= tab.tasks(); ++t)
    for (int i = 1; i <= tab.tasks(); ++i)
      for (int jj = 1; jj <= tab.tasks(); ++jj)
        for (int k = jj + 1; k <= tab.tasks(); ++k) {
          const double v = tab.d_ijkt(i, jj, k, t);
          if (v == 0.0) continue;
          entries.push_back({{"strategy", to_string(tab.strategy)},
                             {"i", i},
                             {"j", jj},
                             {"k", k},
                             {"t", t},
                             {"value", v}});
        }
  j["d_ijkt"] = entries;
  nlohmann::json cijk = nlohmann::json::array();
  for (int i = 1; i < tab.tasks(); ++i)
    for (int jj = 1; jj <= tab.tasks(); ++jj)
      for (int k = jj + 1; k <= tab.tasks(); ++k) {
        const double v = tab.c_ijk(i, jj, k);
        if (v == 0.0) continue;
        cijk.push_back({{"strategy", to_string(tab.strategy)},
                        {"i", i},
                        {"j", jj},
                        {"k", k},
                        {"value", v}});
      }
  j["c_ijk"] = cijk;
  return j;
}

inline nlohmann::json report_to_json(const check_report& rep, bool include_points = false) {
  nlohmann::json j;
  j["name"] = rep.name;
  j["grid"] = rep.grid_description;
  j["asserted"] = rep.asserted;
  j["passed"] = rep.passed;
  j["failed"] = rep.failed;
  j["marginal"] = rep.marginal;
  j["skipped"] = rep.skipped;
  j["worst_margin"] = rep.worst_margin;
  if (include_points) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& pt : rep.points) {
      nlohmann::json e;
      e["params"] = pt.params;
      e["asserted"] = pt.asserted;
      if (pt.asserted) {
        e["passed"] = pt.passed;
        e["marginal"] = pt.marginal;
        e["margin"] = pt.margin;
      } else {
        e["skip_reason"] = pt.skip_reason;
      }
      pts.push_back(e);
    }
    j["points"] = pts;
  } else {
    // always list the interesting points: failures and marginals
    nlohmann::json bad = nlohmann::json::array();
    for (const auto& pt : rep.points) {
      if (!pt.asserted || (pt.passed && !pt.marginal)) continue;
      nlohmann::json e;
      e["params"] = pt.params;
      e["margin"] = pt.margin;
      e["marginal"] = pt.marginal;
      bad.push_back(e);
    }
    j["flagged_points"] = bad;
  }
  return j;
}

inline nlohmann::json identities_to_json(const identity_report& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"name", r.name},
                    {"m", r.m},
                    {"analytic", r.analytic},
                    {"empirical", r.empirical},
                    {"std_error", r.std_error},
                    {"z", r.z}});
  return {{"rows", rows}, {"max_abs_z", rep.max_abs_z}};
}

}  // namespace rehearsal
