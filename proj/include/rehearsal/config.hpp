#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/io.hpp"
#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/trainers.hpp"

namespace rehearsal {

// Flat INI-style config: [section] headers, key = value lines, '#' comments.
// Validation happens before any compute; unknown keys are rejected so typos
// fail loudly.

struct run_config {
  problem_config problem;

  ground_truth_kind gt_kind = ground_truth_kind::equal_gap;
  double gap_sq = 1.0;
  std::uint64_t geometry_seed = 1234;

  std::vector<strategy_kind> strategies{strategy_kind::concurrent, strategy_kind::sequential};
  sequential_order order = sequential_order::oldest_first;
  partition_rule partition;

  long trials = 1000;
  std::uint64_t seed = 42;
  int workers = 0;
  std::string out_dir;
  std::string format = "csv";  // csv | json

  sweep_axis axis = sweep_axis::gap_sq;
  std::vector<double> grid;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !parts.empty()) parts.push_back(trim(cur));
  return parts;
}

inline double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw config_invalid(field, "cannot parse '" + v + "' as a number");
  }
}

inline long parse_long(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw config_invalid(field, "cannot parse '" + v + "' as an integer");
  }
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw config_invalid(field, "cannot parse '" + v + "' as an unsigned integer");
  }
}

// grid syntax: explicit "a,b,c", "linspace:lo:hi:count" or "geom:lo:hi:count"
inline std::vector<double> parse_grid(const std::string& field, const std::string& v) {
  std::vector<double> out;
  if (v.rfind("linspace:", 0) == 0 || v.rfind("geom:", 0) == 0) {
    const bool geometric = v.rfind("geom:", 0) == 0;
    const auto parts = split(v.substr(v.find(':') + 1), ':');
    if (parts.size() != 3) throw config_invalid(field, "expect lo:hi:count after the prefix");
    const double lo = parse_double(field, parts[0]);
    const double hi = parse_double(field, parts[1]);
    const long count = parse_long(field, parts[2]);
    if (count < 1) throw config_invalid(field, "grid count must be >= 1");
    if (geometric && (lo <= 0 || hi <= 0))
      throw config_invalid(field, "geometric grid needs positive endpoints");
    for (long i = 0; i < count; ++i) {
      const double u = count == 1 ? 0.0 : double(i) / (count - 1);
      out.push_back(geometric ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u);
    }
    return out;
  }
  for (const auto& tok : split(v, ','))
    if (!tok.empty()) out.push_back(parse_double(field, tok));
  if (out.empty()) throw config_invalid(field, "empty grid");
  return out;
}

// per-task int-list syntax for explicit partitions/orders: "t2:1;t3:1,2;t4:2"
inline std::vector<std::vector<int>> parse_per_task_lists(const std::string& field,
                                                          const std::string& v, int T) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(std::max(0, T - 1)));
  for (const auto& chunk : split(v, ';')) {
    if (chunk.empty()) continue;
    const auto colon = chunk.find(':');
    if (colon == std::string::npos || chunk[0] != 't')
      throw config_invalid(field, "expect t<task>:i,j,... entries separated by ';'");
    const long t = parse_long(field, chunk.substr(1, colon - 1));
    if (t < 2 || t > T) throw config_invalid(field, "task index out of range in '" + chunk + "'");
    std::vector<int> lst;
    for (const auto& tok : split(chunk.substr(colon + 1), ','))
      if (!tok.empty()) lst.push_back(static_cast<int>(parse_long(field, tok)));
    out[static_cast<std::size_t>(t - 2)] = lst;
  }
  return out;
}

}  // namespace config_detail

inline std::map<std::string, std::string> parse_ini(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = config_detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_invalid(line, "expected key = value");
    const std::string key = config_detail::trim(line.substr(0, eq));
    const std::string value = config_detail::trim(line.substr(eq + 1));
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

inline run_config parse_run_config(const std::string& text) {
  using namespace config_detail;
  auto kv = parse_ini(text);
  run_config rc;

  auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("problem.T"); !v.empty()) rc.problem.T = static_cast<int>(parse_long("problem.T", v));
  if (auto v = take("problem.p"); !v.empty()) rc.problem.p = static_cast<int>(parse_long("problem.p", v));
  if (auto v = take("problem.n"); !v.empty()) rc.problem.n = static_cast<int>(parse_long("problem.n", v));
  if (auto v = take("problem.M"); !v.empty()) rc.problem.M = static_cast<int>(parse_long("problem.M", v));
  if (auto v = take("problem.sigma"); !v.empty()) rc.problem.sigma = parse_double("problem.sigma", v);

  if (auto v = take("ground_truth.kind"); !v.empty()) {
    if (v == "equal_gap")
      rc.gt_kind = ground_truth_kind::equal_gap;
    else if (v == "orthonormal")
      rc.gt_kind = ground_truth_kind::orthonormal;
    else
      throw config_invalid("ground_truth.kind", "expect equal_gap or orthonormal");
  }
  if (auto v = take("ground_truth.gap_sq"); !v.empty()) rc.gap_sq = parse_double("ground_truth.gap_sq", v);
  if (auto v = take("ground_truth.seed"); !v.empty()) rc.geometry_seed = parse_u64("ground_truth.seed", v);

  if (auto v = take("strategy.kinds"); !v.empty()) {
    rc.strategies.clear();
    for (const auto& tok : split(v, ','))
      if (!tok.empty()) rc.strategies.push_back(strategy_from_string(tok));
    if (rc.strategies.empty()) throw config_invalid("strategy.kinds", "empty strategy list");
  }
  if (auto v = take("strategy.sequential_order"); !v.empty()) {
    if (v == "oldest_first")
      rc.order = sequential_order::oldest_first;
    else if (v == "newest_first")
      rc.order = sequential_order::newest_first;
    else
      throw config_invalid("strategy.sequential_order", "expect oldest_first or newest_first");
  }
  if (auto v = take("strategy.partition_mode"); !v.empty()) {
    if (v == "explicit")
      rc.partition.mode = partition_rule::mode_t::explicit_sets;
    else if (v == "gap_threshold")
      rc.partition.mode = partition_rule::mode_t::gap_threshold;
    else if (v == "gradient_cosine")
      rc.partition.mode = partition_rule::mode_t::gradient_cosine;
    else
      throw config_invalid("strategy.partition_mode",
                           "expect explicit, gap_threshold or gradient_cosine");
  }
  if (auto v = take("strategy.tau"); !v.empty()) rc.partition.tau = parse_double("strategy.tau", v);
  if (auto v = take("strategy.gap_tau"); !v.empty())
    rc.partition.gap_tau = parse_double("strategy.gap_tau", v);
  if (auto v = take("strategy.similar_sets"); !v.empty())
    rc.partition.explicit_sim = parse_per_task_lists("strategy.similar_sets", v, rc.problem.T);

  if (auto v = take("run.trials"); !v.empty()) rc.trials = parse_long("run.trials", v);
  if (auto v = take("run.seed"); !v.empty()) rc.seed = parse_u64("run.seed", v);
  if (auto v = take("run.workers"); !v.empty()) rc.workers = static_cast<int>(parse_long("run.workers", v));
  if (auto v = take("run.out"); !v.empty()) rc.out_dir = v;
  if (auto v = take("run.format"); !v.empty()) {
    if (v != "csv" && v != "json") throw config_invalid("run.format", "expect csv or json");
    rc.format = v;
  }

  if (auto v = take("sweep.axis"); !v.empty()) rc.axis = sweep_axis_from_string(v);
  if (auto v = take("sweep.grid"); !v.empty()) rc.grid = parse_grid("sweep.grid", v);

  if (!kv.empty()) throw config_invalid(kv.begin()->first, "unknown key");

  rc.problem.validate();
  if (rc.trials < 2) throw config_invalid("run.trials", "need trials >= 2 for a defined std error");
  if (rc.workers < 0) throw config_invalid("run.workers", "need workers >= 0");
  if (rc.gap_sq < 0) throw config_invalid("ground_truth.gap_sq", "need gap_sq >= 0");
  return rc;
}

// serialized form; parsing it back yields an identical run
inline std::string serialize_run_config(const run_config& rc) {
  std::string s;
  s += "[problem]\n";
  s += "T = " + std::to_string(rc.problem.T) + "\n";
  s += "p = " + std::to_string(rc.problem.p) + "\n";
  s += "n = " + std::to_string(rc.problem.n) + "\n";
  s += "M = " + std::to_string(rc.problem.M) + "\n";
  s += "sigma = " + format_double(rc.problem.sigma) + "\n\n";
  s += "[ground_truth]\n";
  s += "kind = " + std::string(to_string(rc.gt_kind)) + "\n";
  s += "gap_sq = " + format_double(rc.gap_sq) + "\n";
  s += "seed = " + std::to_string(rc.geometry_seed) + "\n\n";
  s += "[strategy]\n";
  s += "kinds = ";
  for (std::size_t i = 0; i < rc.strategies.size(); ++i)
    s += std::string(i ? "," : "") + to_string(rc.strategies[i]);
  s += "\n";
  s += std::string("sequential_order = ") +
       (rc.order == sequential_order::newest_first ? "newest_first" : "oldest_first") + "\n";
  switch (rc.partition.mode) {
    case partition_rule::mode_t::explicit_sets: {
      s += "partition_mode = explicit\n";
      std::string sets;
      for (std::size_t t = 0; t < rc.partition.explicit_sim.size(); ++t) {
        if (!sets.empty()) sets += ";";
        sets += "t" + std::to_string(t + 2) + ":";
        const auto& lst = rc.partition.explicit_sim[t];
        for (std::size_t i = 0; i < lst.size(); ++i)
          sets += std::string(i ? "," : "") + std::to_string(lst[i]);
      }
      if (!sets.empty()) s += "similar_sets = " + sets + "\n";
      break;
    }
    case partition_rule::mode_t::gap_threshold:
      s += "partition_mode = gap_threshold\n";
      s += "gap_tau = " + format_double(rc.partition.gap_tau) + "\n";
      break;
    case partition_rule::mode_t::gradient_cosine:
      s += "partition_mode = gradient_cosine\n";
      s += "tau = " + format_double(rc.partition.tau) + "\n";
      break;
  }
  s += "\n[run]\n";
  s += "trials = " + std::to_string(rc.trials) + "\n";
  s += "seed = " + std::to_string(rc.seed) + "\n";
  s += "workers = " + std::to_string(rc.workers) + "\n";
  if (!rc.out_dir.empty()) s += "out = " + rc.out_dir + "\n";
  s += "format = " + rc.format + "\n";
  if (!rc.grid.empty()) {
    s += "\n[sweep]\n";
    s += "axis = " + std::string(to_string(rc.axis)) + "\n";
    s += "grid = ";
    for (std::size_t i = 0; i < rc.grid.size(); ++i)
      s += std::string(i ? "," : "") + format_double(rc.grid[i]);
    s += "\n";
  }
  return s;
}

}  // namespace rehearsal
