#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/trainers.hpp"

namespace rehearsal {

// L_i(w) = |w - w*_i|^2
inline double model_error(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  if (w.size() != w_star.size()) throw dimension_mismatch("model_error operands differ in size");
  return (w - w_star).squaredNorm();
}

// average forgetting of old tasks: mean over i < T of L_i(w_T) - L_i(w_i);
// negative values mean backward transfer
inline double forgetting(const train_trace& trace) {
  const int T = trace.cfg.T;
  if (T < 2) throw too_few_tasks("forgetting needs T >= 2");
  double acc = 0;
  for (int i = 1; i < T; ++i)
    acc += trace.per_step_errors(i - 1, T - 1) - trace.per_step_errors(i - 1, i - 1);
  return acc / (T - 1);
}

// overall model generalization after the final task: mean over i of L_i(w_T)
inline double generalization(const train_trace& trace) {
  const int T = trace.cfg.T;
  double acc = 0;
  for (int i = 1; i <= T; ++i) acc += trace.per_step_errors(i - 1, T - 1);
  return acc / T;
}

struct metric_report {
  double F_T = 0;
  double G_T = 0;
  std::vector<double> per_task_forgetting;      // L_i(w_T) - L_i(w_i), i = 1..T-1
  std::vector<double> per_task_generalization;  // L_i(w_T), i = 1..T
};

inline metric_report make_metric_report(const train_trace& trace) {
  metric_report r;
  const int T = trace.cfg.T;
  for (int i = 1; i < T; ++i)
    r.per_task_forgetting.push_back(trace.per_step_errors(i - 1, T - 1) -
                                    trace.per_step_errors(i - 1, i - 1));
  for (int i = 1; i <= T; ++i)
    r.per_task_generalization.push_back(trace.per_step_errors(i - 1, T - 1));
  r.F_T = T >= 2 ? forgetting(trace) : 0.0;
  r.G_T = generalization(trace);
  return r;
}

}  // namespace rehearsal
