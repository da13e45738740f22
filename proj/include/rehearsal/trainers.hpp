#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/rng.hpp"
#include "rehearsal/solver.hpp"

namespace rehearsal {

enum class strategy_kind { concurrent, sequential, hybrid };

inline const char* to_string(strategy_kind k) {
  switch (k) {
    case strategy_kind::concurrent: return "concurrent";
    case strategy_kind::sequential: return "sequential";
    default: return "hybrid";
  }
}

inline strategy_kind strategy_from_string(const std::string& s) {
  if (s == "concurrent") return strategy_kind::concurrent;
  if (s == "sequential") return strategy_kind::sequential;
  if (s == "hybrid") return strategy_kind::hybrid;
  throw config_invalid("strategy", "unknown strategy '" + s + "'");
}

enum class sequential_order { oldest_first, newest_first, explicit_order };

struct partition_rule {
  enum class mode_t { explicit_sets, gap_threshold, gradient_cosine };
  mode_t mode = mode_t::explicit_sets;
  // explicit mode: similar-task index sets per task t = 2..T (entry t-2);
  // the dissimilar set is the complement within [t-1]
  std::vector<std::vector<int>> explicit_sim;
  double tau = 0.0;      // cosine threshold, gradient_cosine mode
  double gap_tau = 0.0;  // squared-distance threshold, gap_threshold mode
};

struct strategy_spec {
  strategy_kind kind = strategy_kind::concurrent;
  sequential_order order = sequential_order::oldest_first;
  // explicit_order mode: permutation of [t-1] per task t = 2..T (entry t-2)
  std::vector<std::vector<int>> explicit_perms;
  partition_rule partition;
};

// one full run: per-task learned parameters plus the (i,t) model-error table
struct train_trace {
  problem_config cfg;
  strategy_spec spec;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> params;   // w_t, index t-1
  Eigen::MatrixXd per_step_errors;       // (i-1, t-1) -> L_i(w_t) = |w_t - w*_i|^2
  std::vector<std::vector<int>> realized_sim;  // hybrid: similar sets actually used, entry t-2
  int zero_gradient_warnings = 0;
};

// everything drawn for one task: current data plus fresh memory
struct task_round {
  int t = 1;
  task_dataset current;
  memory_buffer memory;  // empty for t = 1
  bool non_integer_allocation = false;
};

// Draw order is fixed (current X, current noise, then memory chunks oldest
// to newest) so that every strategy consumes an identical stream and
// cross-strategy comparisons share the same data.
inline task_round draw_round(const ground_truth_set& gt, const problem_config& cfg, int t,
                             rng& g) {
  task_round r;
  r.t = t;
  r.current = sample_task_dataset(gt, t, cfg.n, cfg.sigma, g);
  if (t >= 2) {
    const memory_allocation alloc = allocate_memory(cfg.M, t);
    r.non_integer_allocation = alloc.non_integer;
    r.memory = draw_memory(gt, alloc.counts, cfg.sigma, g);
  }
  return r;
}

namespace detail {

inline Eigen::MatrixXd concat_columns(const task_dataset& current,
                                      const memory_buffer& memory,
                                      const std::vector<int>& tasks) {
  int cols = current.m;
  for (int h : tasks) cols += memory.counts[static_cast<std::size_t>(h - 1)];
  Eigen::MatrixXd X(current.X.rows(), cols);
  Eigen::Index at = 0;
  X.middleCols(at, current.m) = current.X;
  at += current.m;
  for (int h : tasks) {
    const auto& chunk = memory.per_task[static_cast<std::size_t>(h - 1)];
    X.middleCols(at, chunk.m) = chunk.X;
    at += chunk.m;
  }
  return X;
}

inline Eigen::VectorXd concat_outputs(const task_dataset& current,
                                      const memory_buffer& memory,
                                      const std::vector<int>& tasks) {
  int rows = current.m;
  for (int h : tasks) rows += memory.counts[static_cast<std::size_t>(h - 1)];
  Eigen::VectorXd Y(rows);
  Eigen::Index at = 0;
  Y.segment(at, current.m) = current.Y;
  at += current.m;
  for (int h : tasks) {
    const auto& chunk = memory.per_task[static_cast<std::size_t>(h - 1)];
    Y.segment(at, chunk.m) = chunk.Y;
    at += chunk.m;
  }
  return Y;
}

inline std::vector<int> revisit_order(const strategy_spec& spec, int t) {
  std::vector<int> order(static_cast<std::size_t>(t - 1));
  for (int h = 1; h < t; ++h) order[static_cast<std::size_t>(h - 1)] = h;
  switch (spec.order) {
    case sequential_order::oldest_first:
      return order;
    case sequential_order::newest_first:
      std::reverse(order.begin(), order.end());
      return order;
    case sequential_order::explicit_order: {
      const std::size_t idx = static_cast<std::size_t>(t - 2);
      if (idx >= spec.explicit_perms.size())
        throw permutation_invalid("no explicit order supplied for task " + std::to_string(t));
      std::vector<int> perm = spec.explicit_perms[idx];
      std::vector<int> sorted = perm;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != order)
        throw permutation_invalid("order for task " + std::to_string(t) +
                                  " is not a permutation of 1..t-1");
      return perm;
    }
  }
  return order;
}

}  // namespace detail

// MSE gradient at w, averaged over the dataset: 2 X (X^T w - Y) / m
inline Eigen::VectorXd mse_gradient(const task_dataset& d, const Eigen::VectorXd& w) {
  if (d.m == 0) return Eigen::VectorXd::Zero(w.size());
  return d.X * (d.X.transpose() * w - d.Y) * (2.0 / d.m);
}

struct buffer_partition {
  std::vector<int> similar;     // ascending
  std::vector<int> dissimilar;  // ascending
  int zero_gradient_warnings = 0;
};

// Splits the memory into tasks rehearsed jointly with the current data and
// tasks revisited afterwards.  gradient_cosine compares the current loss
// gradient with each chunk's at w_prev; a chunk lands in the dissimilar set
// iff the cosine falls below tau.  Gradients too small for a defined cosine
// default to similar and are counted as warnings.
inline buffer_partition divide_buffer(const task_dataset& current, const memory_buffer& memory,
                                      const Eigen::VectorXd& w_prev, const partition_rule& rule,
                                      const ground_truth_set* gt = nullptr) {
  const int prev_tasks = static_cast<int>(memory.per_task.size());
  buffer_partition part;

  auto check_disjoint_complete = [&](const std::vector<int>& sim) {
    std::vector<char> seen(static_cast<std::size_t>(prev_tasks) + 1, 0);
    for (int h : sim) {
      if (h < 1 || h > prev_tasks)
        throw partition_invalid("similar-set index " + std::to_string(h) + " outside [1, t-1]");
      if (seen[static_cast<std::size_t>(h)])
        throw partition_invalid("similar-set index " + std::to_string(h) + " repeated");
      seen[static_cast<std::size_t>(h)] = 1;
    }
  };

  switch (rule.mode) {
    case partition_rule::mode_t::explicit_sets: {
      const std::size_t idx = static_cast<std::size_t>(current.source_task - 2);
      if (idx >= rule.explicit_sim.size())
        throw partition_invalid("no explicit partition for task " +
                                std::to_string(current.source_task));
      std::vector<int> sim = rule.explicit_sim[idx];
      check_disjoint_complete(sim);
      std::sort(sim.begin(), sim.end());
      part.similar = sim;
      break;
    }
    case partition_rule::mode_t::gap_threshold: {
      if (gt == nullptr)
        throw partition_invalid("gap_threshold mode needs the ground-truth gap matrix");
      for (int h = 1; h <= prev_tasks; ++h)
        if (!(gt->gap(h, current.source_task) > rule.gap_tau)) part.similar.push_back(h);
      break;
    }
    case partition_rule::mode_t::gradient_cosine: {
      const Eigen::VectorXd g_cur = mse_gradient(current, w_prev);
      const double cur_norm = g_cur.norm();
      for (int h = 1; h <= prev_tasks; ++h) {
        const auto& chunk = memory.per_task[static_cast<std::size_t>(h - 1)];
        const Eigen::VectorXd g_h = mse_gradient(chunk, w_prev);
        const double h_norm = g_h.norm();
        if (cur_norm < 1e-14 || h_norm < 1e-14) {
          part.similar.push_back(h);
          part.zero_gradient_warnings += 1;
          continue;
        }
        const double cosine = g_cur.dot(g_h) / (cur_norm * h_norm);
        if (!(cosine < rule.tau)) part.similar.push_back(h);
      }
      break;
    }
  }

  std::vector<char> is_sim(static_cast<std::size_t>(prev_tasks) + 1, 0);
  for (int h : part.similar) is_sim[static_cast<std::size_t>(h)] = 1;
  for (int h = 1; h <= prev_tasks; ++h)
    if (!is_sim[static_cast<std::size_t>(h)]) part.dissimilar.push_back(h);
  return part;
}

// incrementally built run; advance_* consume one task_round each
struct trainer_state {
  Eigen::VectorXd w;
  std::vector<Eigen::VectorXd> params;
  std::vector<std::vector<int>> realized_sim;
  int zero_gradient_warnings = 0;
  int tasks_done = 0;
};

inline trainer_state make_trainer_state(int p) {
  trainer_state st;
  st.w = Eigen::VectorXd::Zero(p);  // w_0 = 0
  return st;
}

// joint min-norm fit of the current data and all memory
inline void advance_concurrent(trainer_state& st, const task_round& round) {
  std::vector<int> all_tasks;
  for (int h = 1; h <= static_cast<int>(round.memory.per_task.size()); ++h)
    all_tasks.push_back(h);
  const Eigen::MatrixXd X = detail::concat_columns(round.current, round.memory, all_tasks);
  const Eigen::VectorXd Y = detail::concat_outputs(round.current, round.memory, all_tasks);
  st.w = min_norm_fit(X, Y, st.w).w;
  st.params.push_back(st.w);
  st.tasks_done = round.t;
}

// current data first, then each memory chunk in the requested order
inline void advance_sequential(trainer_state& st, const strategy_spec& spec,
                               const task_round& round) {
  st.w = min_norm_fit(round.current.X, round.current.Y, st.w).w;
  if (round.t >= 2) {
    for (int h : detail::revisit_order(spec, round.t)) {
      const auto& chunk = round.memory.per_task[static_cast<std::size_t>(h - 1)];
      if (chunk.m == 0) continue;
      st.w = min_norm_fit(chunk.X, chunk.Y, st.w).w;
    }
  }
  st.params.push_back(st.w);
  st.tasks_done = round.t;
}

// joint fit over current data plus similar memory, then sequential fits over
// the dissimilar chunks, oldest first
inline void advance_hybrid(trainer_state& st, const strategy_spec& spec, const task_round& round,
                           const ground_truth_set* gt) {
  if (round.t == 1) {
    st.w = min_norm_fit(round.current.X, round.current.Y, st.w).w;
    st.params.push_back(st.w);
    st.tasks_done = round.t;
    return;
  }
  const buffer_partition part =
      divide_buffer(round.current, round.memory, st.w, spec.partition, gt);
  st.zero_gradient_warnings += part.zero_gradient_warnings;
  st.realized_sim.push_back(part.similar);

  const Eigen::MatrixXd X = detail::concat_columns(round.current, round.memory, part.similar);
  const Eigen::VectorXd Y = detail::concat_outputs(round.current, round.memory, part.similar);
  st.w = min_norm_fit(X, Y, st.w).w;
  for (int h : part.dissimilar) {
    const auto& chunk = round.memory.per_task[static_cast<std::size_t>(h - 1)];
    if (chunk.m == 0) continue;
    st.w = min_norm_fit(chunk.X, chunk.Y, st.w).w;
  }
  st.params.push_back(st.w);
  st.tasks_done = round.t;
}

inline void advance(trainer_state& st, const strategy_spec& spec, const task_round& round,
                    const ground_truth_set* gt) {
  switch (spec.kind) {
    case strategy_kind::concurrent: advance_concurrent(st, round); break;
    case strategy_kind::sequential: advance_sequential(st, spec, round); break;
    case strategy_kind::hybrid: advance_hybrid(st, spec, round, gt); break;
  }
}

inline train_trace finish_trace(trainer_state&& st, const problem_config& cfg,
                                const ground_truth_set& gt, const strategy_spec& spec,
                                std::uint64_t seed) {
  train_trace tr;
  tr.cfg = cfg;
  tr.spec = spec;
  tr.seed = seed;
  tr.params = std::move(st.params);
  tr.realized_sim = std::move(st.realized_sim);
  tr.zero_gradient_warnings = st.zero_gradient_warnings;
  const int T = cfg.T;
  tr.per_step_errors.resize(T, T);
  for (int t = 1; t <= T; ++t)
    for (int i = 1; i <= T; ++i)
      tr.per_step_errors(i - 1, t - 1) =
          (tr.params[static_cast<std::size_t>(t - 1)] - gt.vectors.col(i - 1)).squaredNorm();
  return tr;
}

inline train_trace run_training(const problem_config& cfg, const ground_truth_set& gt,
                                const strategy_spec& spec, std::uint64_t seed) {
  cfg.validate();
  if (gt.tasks() != cfg.T) throw shape_mismatch("ground truth has a different T than the config");
  if (gt.dim() != cfg.p) throw shape_mismatch("ground truth has a different p than the config");
  rng g = rng::for_stream(seed, stream::trial);
  trainer_state st = make_trainer_state(cfg.p);
  for (int t = 1; t <= cfg.T; ++t) {
    const task_round round = draw_round(gt, cfg, t, g);
    advance(st, spec, round, &gt);
  }
  return finish_trace(std::move(st), cfg, gt, spec, seed);
}

inline train_trace train_concurrent(const problem_config& cfg, const ground_truth_set& gt,
                                    std::uint64_t seed) {
  strategy_spec spec;
  spec.kind = strategy_kind::concurrent;
  return run_training(cfg, gt, spec, seed);
}

inline train_trace train_sequential(const problem_config& cfg, const ground_truth_set& gt,
                                    const strategy_spec& spec, std::uint64_t seed) {
  strategy_spec s = spec;
  s.kind = strategy_kind::sequential;
  return run_training(cfg, gt, s, seed);
}

inline train_trace train_hybrid(const problem_config& cfg, const ground_truth_set& gt,
                                const strategy_spec& spec, std::uint64_t seed) {
  strategy_spec s = spec;
  s.kind = strategy_kind::hybrid;
  return run_training(cfg, gt, s, seed);
}

}  // namespace rehearsal
