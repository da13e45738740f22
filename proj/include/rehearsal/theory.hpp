#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/trainers.hpp"

// Closed-form expected forgetting / generalization for the three rehearsal
// strategies, via two independent routes:
//
//   predict_recursive      iterates the exact per-step expectation recursion
//                          of E[L_i(w_t)], transcribed in its raw form
//                          (block projections, cross terms and all);
//
//   predict_coefficients   builds the explicit coefficient tables
//                          {d_0t, d_ijkt, c_i, c_ijk, noise_t} by rolling the
//                          recursion out into closed products, which
//                          assemble_from_coefficients then contracts against
//                          the ground-truth norms and gaps.
//
// The two routes share nothing past the memory-allocation rule; their
// agreement (1e-10 relative) is the correctness oracle for both.  Memory is
// allocated as equally as possible with the remainder to the oldest tasks;
// when (t-1) does not divide M the expressions use the actual per-chunk
// counts and the result carries a non_integer_allocation flag.

namespace rehearsal {

// per-task split of [t-1] into jointly-rehearsed and revisited tasks
struct theory_partitions {
  std::vector<std::vector<int>> sim;  // entry t-2 lists the similar tasks of task t

  static theory_partitions all_similar(int T) {
    theory_partitions p;
    for (int t = 2; t <= T; ++t) {
      std::vector<int> s(static_cast<std::size_t>(t - 1));
      for (int h = 1; h < t; ++h) s[static_cast<std::size_t>(h - 1)] = h;
      p.sim.push_back(std::move(s));
    }
    return p;
  }

  static theory_partitions all_dissimilar(int T) {
    theory_partitions p;
    for (int t = 2; t <= T; ++t) p.sim.emplace_back();
    return p;
  }

  static theory_partitions from_realized(const std::vector<std::vector<int>>& realized) {
    theory_partitions p;
    p.sim = realized;
    for (auto& s : p.sim) std::sort(s.begin(), s.end());
    return p;
  }

  void validate(int T) const {
    if (static_cast<int>(sim.size()) != T - 1)
      throw partition_invalid("need one similar set per task t = 2..T");
    for (int t = 2; t <= T; ++t) {
      const auto& s = sim[static_cast<std::size_t>(t - 2)];
      std::vector<char> seen(static_cast<std::size_t>(t), 0);
      for (int h : s) {
        if (h < 1 || h >= t)
          throw partition_invalid("similar index " + std::to_string(h) + " outside [1, t-1]");
        if (seen[static_cast<std::size_t>(h)])
          throw partition_invalid("similar index " + std::to_string(h) + " repeated");
        seen[static_cast<std::size_t>(h)] = 1;
      }
    }
  }

  std::vector<int> similar_of(int t) const {
    std::vector<int> s = sim[static_cast<std::size_t>(t - 2)];
    std::sort(s.begin(), s.end());
    return s;
  }
};

namespace theory_detail {

// static description of the fits performed at task t under a strategy
struct task_step {
  int t = 1;
  std::vector<std::pair<int, int>> joint_blocks;  // (task, size); current task first
  std::vector<std::pair<int, int>> revisits;      // (task, size), in revisit order
  int joint_size = 0;                             // n + similar memory
  bool non_integer = false;
};

inline task_step build_step(const problem_config& cfg, strategy_kind kind,
                            const theory_partitions* parts, int t) {
  task_step st;
  st.t = t;
  st.joint_blocks.emplace_back(t, cfg.n);
  st.joint_size = cfg.n;
  if (t == 1) return st;

  const memory_allocation alloc = allocate_memory(cfg.M, t);
  st.non_integer = alloc.non_integer;
  std::vector<int> sim;
  switch (kind) {
    case strategy_kind::concurrent:
      for (int h = 1; h < t; ++h) sim.push_back(h);
      break;
    case strategy_kind::sequential:
      break;
    case strategy_kind::hybrid:
      if (parts == nullptr) throw partition_invalid("hybrid prediction needs partitions");
      sim = parts->similar_of(t);
      break;
  }
  std::vector<char> is_sim(static_cast<std::size_t>(t), 0);
  for (int h : sim) is_sim[static_cast<std::size_t>(h)] = 1;
  for (int h : sim) {
    const int c = alloc.counts[static_cast<std::size_t>(h - 1)];
    if (c > 0) {
      st.joint_blocks.emplace_back(h, c);
      st.joint_size += c;
    }
  }
  for (int h = 1; h < t; ++h) {
    if (is_sim[static_cast<std::size_t>(h)]) continue;
    const int c = alloc.counts[static_cast<std::size_t>(h - 1)];
    if (c > 0) st.revisits.emplace_back(h, c);
  }
  return st;
}

inline double lambda_noise(int a, double sigma, int p) {
  if (sigma == 0.0) return 0.0;
  if (p <= a + 1)
    throw denominator_domain("noise term needs p > " + std::to_string(a) + " + 1");
  return a * sigma * sigma / (p - a - 1.0);
}

}  // namespace theory_detail

struct theory_prediction {
  double F = 0;
  double G = 0;
  Eigen::MatrixXd expected_errors;  // (i-1, t-1) -> E[L_i(w_t)]
  bool non_integer_allocation = false;
};

// ---------------------------------------------------------------------------
// route 1: the per-step expectation recursion, raw transcription
// ---------------------------------------------------------------------------

inline theory_prediction predict_recursive(const problem_config& cfg,
                                           const ground_truth_view& gt, strategy_kind kind,
                                           const theory_partitions* parts = nullptr) {
  cfg.validate();
  if (gt.tasks() != cfg.T) throw shape_mismatch("ground truth view has a different T");
  if (kind == strategy_kind::hybrid) {
    if (parts == nullptr) throw partition_invalid("hybrid prediction needs partitions");
    parts->validate(cfg.T);
  }
  const double p = cfg.p;
  const int T = cfg.T;

  theory_prediction out;
  out.expected_errors.resize(T, T);

  for (int i = 1; i <= T; ++i) {
    double e = gt.sq_norm(i);  // w_0 = 0, so E[L_i(w_0)] = |w*_i|^2
    for (int t = 1; t <= T; ++t) {
      const auto step = theory_detail::build_step(cfg, kind, parts, t);
      out.non_integer_allocation |= step.non_integer;

      const int a = step.joint_size;
      const double den = p - a - 1.0;
      const bool need_den = step.joint_blocks.size() >= 2;
      if (need_den && den <= 0)
        throw denominator_domain("interference terms need p > n + memory + 1 at task " +
                                 std::to_string(t));

      double e2 = (1.0 - a / p) * e;
      for (const auto& [tau, s] : step.joint_blocks) {
        double coef = s / p;
        if (a - s > 0) coef *= 1.0 + (a - s) / den;
        e2 += coef * gt.gap(tau, i);
      }
      for (std::size_t b1 = 0; b1 < step.joint_blocks.size(); ++b1)
        for (std::size_t b2 = b1 + 1; b2 < step.joint_blocks.size(); ++b2) {
          const auto& [t1, s1] = step.joint_blocks[b1];
          const auto& [t2, s2] = step.joint_blocks[b2];
          e2 += s1 * static_cast<double>(s2) / (p * den) *
                (gt.gap(t1, t2) - gt.gap(t1, i) - gt.gap(t2, i));
        }
      e2 += theory_detail::lambda_noise(a, cfg.sigma, cfg.p);

      for (const auto& [h, c] : step.revisits) {
        e2 = (1.0 - c / p) * e2 + (c / p) * gt.gap(h, i) +
             theory_detail::lambda_noise(c, cfg.sigma, cfg.p);
      }
      e = e2;
      out.expected_errors(i - 1, t - 1) = e;
    }
  }

  if (T >= 2) {
    double f = 0;
    for (int i = 1; i < T; ++i)
      f += out.expected_errors(i - 1, T - 1) - out.expected_errors(i - 1, i - 1);
    out.F = f / (T - 1);
  }
  double g = 0;
  for (int i = 1; i <= T; ++i) g += out.expected_errors(i - 1, T - 1);
  out.G = g / T;
  return out;
}

inline theory_prediction predict_recursive(const problem_config& cfg,
                                           const ground_truth_view& gt,
                                           const strategy_spec& spec,
                                           const theory_partitions* parts = nullptr) {
  if (spec.order != sequential_order::oldest_first)
    throw unsupported_order("theory predictions are only emitted for the oldest-first order");
  return predict_recursive(cfg, gt, spec.kind, parts);
}

// ---------------------------------------------------------------------------
// route 2: explicit coefficient tables
// ---------------------------------------------------------------------------

// noise_t(sigma) = sum of weight * a * sigma^2 / (p - a - 1) terms
struct noise_shape {
  std::vector<std::pair<int, double>> terms;  // (block size, weight)

  void add(int a, double weight) {
    for (auto& [sz, w] : terms)
      if (sz == a) {
        w += weight;
        return;
      }
    terms.emplace_back(a, weight);
  }

  double eval(int p, double sigma) const {
    if (sigma == 0.0) return 0.0;
    double acc = 0;
    for (const auto& [a, w] : terms) acc += w * theory_detail::lambda_noise(a, sigma, p);
    return acc;
  }
};

struct coefficient_table {
  problem_config cfg;
  strategy_kind strategy = strategy_kind::concurrent;
  bool non_integer_allocation = false;

  std::vector<double> d0;                  // d_0t, index t-1
  std::vector<Eigen::MatrixXd> pair_base;  // per t: i-independent pair coefficients, (j-1,k-1)
  std::vector<std::vector<double>> istar;  // per t: coefficient of the pair {tau, i}, index tau-1
  std::vector<noise_shape> noise;          // per t

  int tasks() const { return cfg.T; }

  // total coefficient of |w*_j - w*_k|^2 in E[L_i(w_t)]; symmetric in (j,k)
  double d_ijkt(int i, int j, int k, int t) const {
    if (j == k) return 0.0;
    const auto& base = pair_base[static_cast<std::size_t>(t - 1)];
    const auto& is = istar[static_cast<std::size_t>(t - 1)];
    double v = base(j - 1, k - 1);
    if (k == i) v += is[static_cast<std::size_t>(j - 1)];
    if (j == i) v += is[static_cast<std::size_t>(k - 1)];
    return v;
  }

  double d_0t(int t) const { return d0[static_cast<std::size_t>(t - 1)]; }
  double c_i(int i) const { return d_0t(cfg.T) - d_0t(i); }
  double c_ijk(int i, int j, int k) const { return d_ijkt(i, j, k, cfg.T) - d_ijkt(i, j, k, i); }
  double noise_t(int t, double sigma) const {
    return noise[static_cast<std::size_t>(t - 1)].eval(cfg.p, sigma);
  }
};

inline coefficient_table predict_coefficients(const problem_config& cfg, strategy_kind kind,
                                              const theory_partitions* parts = nullptr) {
  cfg.validate();
  if (kind == strategy_kind::hybrid) {
    if (parts == nullptr) throw partition_invalid("hybrid prediction needs partitions");
    parts->validate(cfg.T);
  }
  const double p = cfg.p;
  const int T = cfg.T;

  coefficient_table tab;
  tab.cfg = cfg;
  tab.strategy = kind;
  tab.d0.assign(static_cast<std::size_t>(T), 0.0);
  tab.pair_base.assign(static_cast<std::size_t>(T), Eigen::MatrixXd::Zero(T, T));
  tab.istar.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  tab.noise.assign(static_cast<std::size_t>(T), noise_shape{});

  std::vector<theory_detail::task_step> steps;
  steps.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    steps.push_back(theory_detail::build_step(cfg, kind, parts, t));
    tab.non_integer_allocation |= steps.back().non_integer;
  }

  // per-step carry factor rho_u = (prod over revisited chunks of 1 - c/p) * (1 - a_u/p)
  std::vector<double> rho(static_cast<std::size_t>(T), 1.0);
  for (int u = 1; u <= T; ++u) {
    double damp = 1.0;
    for (const auto& [h, c] : steps[static_cast<std::size_t>(u - 1)].revisits)
      damp *= 1.0 - c / p;
    rho[static_cast<std::size_t>(u - 1)] =
        damp * (1.0 - steps[static_cast<std::size_t>(u - 1)].joint_size / p);
  }

  for (int t = 1; t <= T; ++t) {
    auto& base = tab.pair_base[static_cast<std::size_t>(t - 1)];
    auto& is = tab.istar[static_cast<std::size_t>(t - 1)];
    auto& nz = tab.noise[static_cast<std::size_t>(t - 1)];

    // phi = prod_{v=u+1..t} rho_v, built from the top
    std::vector<double> phi(static_cast<std::size_t>(t + 1), 1.0);
    for (int u = t - 1; u >= 1; --u)
      phi[static_cast<std::size_t>(u)] =
          phi[static_cast<std::size_t>(u + 1)] * rho[static_cast<std::size_t>(u)];

    // seed through all t steps: |w*_i|^2 keeps rho_1 * ... * rho_t
    tab.d0[static_cast<std::size_t>(t - 1)] = phi[1] * rho[0];

    for (int u = 1; u <= t; ++u) {
      const auto& step = steps[static_cast<std::size_t>(u - 1)];
      const double carry = phi[static_cast<std::size_t>(u)];
      const int a = step.joint_size;
      const double den = p - a - 1.0;
      if (step.joint_blocks.size() >= 2 && den <= 0)
        throw denominator_domain("interference terms need p > n + memory + 1 at task " +
                                 std::to_string(u));
      double damp = 1.0;
      for (const auto& [h, c] : step.revisits) damp *= 1.0 - c / p;

      // joint fit: direct terms toward each block's ground truth
      for (const auto& [tau, s] : step.joint_blocks)
        is[static_cast<std::size_t>(tau - 1)] += carry * damp * (s / p);
      // joint fit: pairwise interference between blocks
      for (std::size_t b1 = 0; b1 < step.joint_blocks.size(); ++b1)
        for (std::size_t b2 = b1 + 1; b2 < step.joint_blocks.size(); ++b2) {
          const auto& [t1, s1] = step.joint_blocks[b1];
          const auto& [t2, s2] = step.joint_blocks[b2];
          const double v = carry * damp * s1 * static_cast<double>(s2) / (p * den);
          base(t1 - 1, t2 - 1) += v;
          base(t2 - 1, t1 - 1) += v;
        }
      nz.add(a, carry * damp);

      // revisited chunks, damped by the fits that come after them
      double after = damp;
      for (const auto& [h, c] : step.revisits) {
        after /= 1.0 - c / p;
        is[static_cast<std::size_t>(h - 1)] += carry * after * (c / p);
        nz.add(c, carry * after);
      }
    }
  }
  return tab;
}

inline theory_prediction assemble_from_coefficients(const coefficient_table& tab,
                                                    const ground_truth_view& gt, double sigma) {
  const int T = tab.cfg.T;
  if (gt.tasks() != T) throw shape_mismatch("table and ground truth disagree on T");

  theory_prediction out;
  out.non_integer_allocation = tab.non_integer_allocation;
  out.expected_errors.resize(T, T);
  for (int t = 1; t <= T; ++t) {
    const double nt = tab.noise_t(t, sigma);
    for (int i = 1; i <= T; ++i) {
      double e = tab.d_0t(t) * gt.sq_norm(i) + nt;
      for (int j = 1; j <= T; ++j)
        for (int k = j + 1; k <= T; ++k) e += tab.d_ijkt(i, j, k, t) * gt.gap(j, k);
      out.expected_errors(i - 1, t - 1) = e;
    }
  }
  if (T >= 2) {
    double f = 0;
    for (int i = 1; i < T; ++i)
      f += out.expected_errors(i - 1, T - 1) - out.expected_errors(i - 1, i - 1);
    out.F = f / (T - 1);
  }
  double g = 0;
  for (int i = 1; i <= T; ++i) g += out.expected_errors(i - 1, T - 1);
  out.G = g / T;
  return out;
}

// closed product-form helpers, used by tests and the table dump
namespace prop {

inline double r(const problem_config& cfg, double a) { return 1.0 - (cfg.n + a) / double(cfg.p); }

inline double B(const problem_config& cfg, int l, int t) {
  if (l == t - 1) return 0.0;
  return cfg.M / ((t - l - 1.0) * cfg.p);
}

inline double H(const problem_config& cfg, int l, int t) {
  return B(cfg, l, t) / (cfg.p - cfg.n - cfg.M - 1.0);
}

inline double K(const problem_config& cfg, int l, int t, int sim_count) {
  return B(cfg, l, t) / (cfg.p - cfg.n - (cfg.M / (t - l - 1.0)) * sim_count - 1.0);
}

inline double Delta(const problem_config& cfg, int t, int a) {
  double acc = 1.0;
  for (int l = 0; l < a; ++l)
    acc *= std::pow(1.0 - B(cfg, l, t), t - l - 1) * r(cfg, 0);
  return acc;
}

// hybrid carry product; valid for exact integer allocation
inline double Gamma(const problem_config& cfg, const theory_partitions& parts, int t, int a) {
  double acc = 1.0;
  for (int l = 0; l < a; ++l) {
    const int u = t - l;
    const int sim = u >= 2 ? static_cast<int>(parts.similar_of(u).size()) : 0;
    const int dis = u >= 2 ? (u - 1) - sim : 0;
    const double chunk = u >= 2 ? cfg.M / (u - 1.0) : 0.0;
    acc *= std::pow(1.0 - B(cfg, l, t), dis) * r(cfg, chunk * sim);
  }
  return acc;
}

inline double Lambda(const problem_config& cfg, double a, double sigma) {
  return a * sigma * sigma / (cfg.p - a - 1.0);
}

}  // namespace prop

// ---------------------------------------------------------------------------
// two-task closed forms
// ---------------------------------------------------------------------------

// F2 = c1 |w*_1|^2 + c2 gap + noiseF(sigma)
// G2 = (d1 (|w*_1|^2 + |w*_2|^2) + d2 gap) / 2 + noiseG(sigma)
struct two_task_constants {
  double xi1 = 0, xi2 = 0, mu1 = 0, mu2 = 0;
  double c1_conc = 0, c2_conc = 0, d1_conc = 0, d2_conc = 0;
  double c1_seq = 0, c2_seq = 0, d1_seq = 0, d2_seq = 0;
  double noiseF_conc = 0, noiseF_seq = 0, noiseG_conc = 0, noiseG_seq = 0;
  double F2_conc = 0, G2_conc = 0, F2_seq = 0, G2_seq = 0;
  double forgetting_gap_root_sigma0 = 0;
  double generalization_gap_root_sigma0 = 0;
  bool forgetting_concurrent_worse = false;
  bool generalization_concurrent_worse = false;
};

inline two_task_constants two_task(const problem_config& cfg, const ground_truth_view& gt2) {
  cfg.validate();
  if (cfg.T != 2) throw config_invalid("T", "two_task needs T = 2");
  if (gt2.tasks() != 2) throw shape_mismatch("two_task needs exactly two ground truths");
  if (!cfg.closed_form_domain())
    throw denominator_domain("two-task closed forms need p > n + M + 1");

  const double p = cfg.p, n = cfg.n, M = cfg.M, s2 = cfg.sigma * cfg.sigma;
  const double D = p - n - M - 1.0;
  const double w1 = gt2.sq_norm(1), w2 = gt2.sq_norm(2), gap = gt2.gap(1, 2);

  two_task_constants out;
  out.c1_conc = -(n + M) / p * (1.0 - n / p);
  out.c2_conc = n / p * (1.0 + M / D);
  out.noiseF_conc = (n + M) * s2 / D - (n + M) / p * (n * s2 / (p - n - 1.0));
  out.c1_seq = (-(n + M) / p + n * M / (p * p)) * (1.0 - n / p);
  out.c2_seq = (1.0 - M / p) * n / p;
  out.noiseF_seq = (1.0 - (n + 2.0 * M) / p + n * M / (p * p)) * (n * s2 / (p - n - 1.0)) +
                   M * s2 / (p - M - 1.0);

  out.d1_conc = (1.0 - (n + M) / p) * (1.0 - n / p);
  out.d2_conc = (2.0 * n + M) / p + 2.0 * n * M / (p * D) - n * (n + M) / (p * p);
  out.noiseG_conc = (n + M) * s2 / D + (1.0 - (n + M) / p) * (n * s2 / (p - n - 1.0));
  out.d1_seq = (1.0 - M / p) * (1.0 - n / p) * (1.0 - n / p);
  out.d2_seq = (2.0 * n + M) / p - n * (n + 2.0 * M) / (p * p) + n * n * M / (p * p * p);
  out.noiseG_seq = (1.0 - M / p) * (2.0 - n / p) * (n * s2 / (p - n - 1.0)) +
                   M * s2 / (p - M - 1.0);

  out.F2_conc = out.c1_conc * w1 + out.c2_conc * gap + out.noiseF_conc;
  out.F2_seq = out.c1_seq * w1 + out.c2_seq * gap + out.noiseF_seq;
  out.G2_conc = 0.5 * (out.d1_conc * (w1 + w2) + out.d2_conc * gap) + out.noiseG_conc;
  out.G2_seq = 0.5 * (out.d1_seq * (w1 + w2) + out.d2_seq * gap) + out.noiseG_seq;

  const double beta = n * M / (p * p) * (1.0 - n / p);
  out.xi1 = (n * M / p) * (1.0 / D + 1.0 / p) / beta;
  out.xi2 = ((n + M) / D - (1.0 - M / p + n * M / (p * p)) * n / (p - n - 1.0) -
             M / (p - M - 1.0)) /
            beta;
  out.mu1 = (n * M / p) * (2.0 / D + 1.0 / p - n / (p * p)) / beta;
  out.mu2 = out.xi2;

  out.forgetting_gap_root_sigma0 =
      (p - n) * D / (p * p + p * D) * w1;
  out.generalization_gap_root_sigma0 =
      (p - n) * D / (2.0 * p * p + (p - n) * D) * (w1 + w2);

  out.forgetting_concurrent_worse = out.xi1 * gap + out.xi2 * s2 > w1;
  out.generalization_concurrent_worse = out.mu1 * gap + 2.0 * out.mu2 * s2 > w1 + w2;
  return out;
}

// ---------------------------------------------------------------------------
// three-task closed forms (sigma = 0)
// ---------------------------------------------------------------------------

struct three_task_result {
  double F3_conc = 0, G3_conc = 0, F3_seq = 0, G3_seq = 0;
};

inline three_task_result three_task(const problem_config& cfg, const ground_truth_view& gt3) {
  cfg.validate();
  if (cfg.T != 3) throw config_invalid("T", "three_task needs T = 3");
  if (gt3.tasks() != 3) throw shape_mismatch("three_task needs exactly three ground truths");
  if (cfg.sigma != 0.0) throw nonzero_sigma();
  if (!cfg.closed_form_domain())
    throw denominator_domain("three-task closed forms need p > n + M + 1");
  if (cfg.M % 2 != 0)
    throw denominator_domain("three-task closed forms assume M even (M/2 memory per task)");

  const double p = cfg.p, n = cfg.n, M = cfg.M;
  const double D = p - n - M - 1.0;
  const double nw1 = gt3.sq_norm(1), nw2 = gt3.sq_norm(2), nw3 = gt3.sq_norm(3);
  const double g12 = gt3.gap(1, 2), g13 = gt3.gap(1, 3), g23 = gt3.gap(2, 3);

  three_task_result out;

  // concurrent forgetting
  out.F3_conc =
      0.5 * (-2.0 * (n + M) / p + (n + M) * (n + M) / (p * p)) * (1.0 - n / p) * nw1 +
      0.5 * (-(n + M) / p) * (1.0 - (n + M) / p) * (1.0 - n / p) * nw2 +
      0.5 *
          ((1.0 - 2.0 * (n + M) / p) * n * M / (p * D) + M * M / (2.0 * p * D) +
           (n + M) / p * (1.0 - n / p) * (1.0 - (n + M) / p)) *
          g12 +
      0.5 * (n / p + n * M / (p * D)) * g13 + 0.5 * (n / p + n * M / (p * D)) * g23;

  // concurrent generalization
  out.G3_conc =
      (1.0 / 3.0) * (1.0 - (n + M) / p) * (1.0 - (n + M) / p) * (1.0 - n / p) *
          (nw1 + nw2 + nw3) +
      (1.0 / 3.0) *
          ((3.0 - 3.0 * (n + M) / p) * n * M / (p * D) + 3.0 * M * M / (4.0 * p * D) +
           (n + M) / p *
               (2.0 - 3.0 * n / p - M / p + n * (n + M) / (p * p))) *
          g12 +
      (1.0 / 3.0) *
          (n / p * (2.0 - 2.0 * (n + M) / p + (n + M) * (n + M) / (p * p)) +
           M / p * (1.0 - (n + M) / p) + M / (2.0 * p) + 3.0 * n * M / (2.0 * p * D)) *
          g13 +
      (1.0 / 3.0) * (n / p * (2.0 - (n + M) / p) + M / (2.0 * p) + 3.0 * n * M / (2.0 * p * D)) *
          g23;

  // sequential forgetting; both cross-task coefficients carry the same 1/2
  const double q = 1.0 - M / (2.0 * p);
  out.F3_seq =
      0.5 *
          (std::pow(1.0 - n / p, 3) * (1.0 - M / p) * q * q - (1.0 - n / p)) * nw1 +
      0.5 *
          (std::pow(1.0 - n / p, 3) * (1.0 - M / p) * q * q -
           (1.0 - n / p) * (1.0 - n / p) * (1.0 - M / p)) *
          nw2 +
      0.5 *
          ((1.0 - n / p) * (1.0 - M / p) * (n / p) * (q * q * (2.0 - n / p) - 1.0) +
           q * q * (1.0 - n / p) * (M / p) - M * M / (4.0 * p * p)) *
          g12 +
      0.5 * q * q * (n / p) * g13 + 0.5 * q * q * (n / p) * g23;

  // sequential generalization
  out.G3_seq =
      (1.0 / 3.0) * std::pow(1.0 - n / p, 3) * (1.0 - M / p) * q * q * (nw1 + nw2 + nw3) +
      (1.0 / 3.0) *
          ((1.0 - n / p) * q * q * ((1.0 - M / p) * (2.0 - n / p) * (n / p) + M / p) + M / p -
           M * M / (4.0 * p * p)) *
          g12 +
      (1.0 / 3.0) *
          (q * q * (n / p) + q * q * (1.0 - n / p) * (M / p) +
           (1.0 - n / p) * (1.0 - n / p) * (1.0 - M / p) * q * q * (n / p) +
           q * (M / (2.0 * p))) *
          g13 +
      (1.0 / 3.0) *
          (q * q * (n / p) * ((1.0 - M / p) * (1.0 - n / p) + 1.0) + M / (2.0 * p)) * g23;

  return out;
}

// ---------------------------------------------------------------------------
// coefficient orderings (concurrent vs sequential)
// ---------------------------------------------------------------------------

struct ordering_family {
  std::string name;
  bool strict = false;       // every comparison holds strictly
  bool with_ties = false;    // holds allowing exact ties
  double worst_margin = 0;   // most adverse (seq - conc) or (conc - seq) value
  int violations = 0;
  int ties = 0;
};

struct ordering_report {
  std::vector<ordering_family> families;
  std::vector<std::pair<std::string, bool>> preconditions;
  bool all_hold_with_ties = true;
};

// Orders c_i, c_ijk, d_0T, d_ijkT between the two strategies at horizon t.
// Violations are recorded, never thrown.
inline ordering_report coefficient_orderings(const problem_config& cfg_in, int t) {
  problem_config cfg = cfg_in;
  cfg.T = t;
  cfg.validate();
  const coefficient_table conc = predict_coefficients(cfg, strategy_kind::concurrent);
  const coefficient_table seq = predict_coefficients(cfg, strategy_kind::sequential);

  const double tie_tol = 1e-12;
  ordering_report rep;
  auto compare = [&](const std::string& name,
                     const std::vector<std::pair<double, double>>& pairs, bool conc_less) {
    ordering_family fam;
    fam.name = name;
    fam.strict = true;
    fam.with_ties = true;
    fam.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : pairs) {  // a = concurrent, b = sequential
      const double margin = conc_less ? b - a : a - b;
      const double scale = std::max({std::abs(a), std::abs(b), 1e-30});
      fam.worst_margin = std::min(fam.worst_margin, margin);
      if (std::abs(margin) <= tie_tol * scale) {
        fam.ties += 1;
        fam.strict = false;
      } else if (margin < 0) {
        fam.violations += 1;
        fam.strict = false;
        fam.with_ties = false;
      }
    }
    rep.families.push_back(fam);
    rep.all_hold_with_ties &= fam.with_ties;
  };

  std::vector<std::pair<double, double>> d0_pairs{{conc.d_0t(t), seq.d_0t(t)}};
  compare("d_0T: concurrent < sequential", d0_pairs, true);

  std::vector<std::pair<double, double>> ci_pairs;
  for (int i = 1; i < t; ++i) ci_pairs.emplace_back(conc.c_i(i), seq.c_i(i));
  compare("c_i: concurrent < sequential", ci_pairs, true);

  std::vector<std::pair<double, double>> dijk_pairs;
  for (int i = 1; i <= t; ++i)
    for (int j = 1; j <= t; ++j)
      for (int k = j + 1; k <= t; ++k)
        dijk_pairs.emplace_back(conc.d_ijkt(i, j, k, t), seq.d_ijkt(i, j, k, t));
  compare("d_ijkT: concurrent >= sequential", dijk_pairs, false);

  std::vector<std::pair<double, double>> cijk_pairs;
  for (int i = 1; i < t; ++i)
    for (int j = 1; j <= t; ++j)
      for (int k = j + 1; k <= t; ++k)
        cijk_pairs.emplace_back(conc.c_ijk(i, j, k), seq.c_ijk(i, j, k));
  compare("c_ijk: concurrent >= sequential", cijk_pairs, false);

  const double nM = cfg.n + cfg.M;
  const double T4 = std::pow(double(t), 4), T3 = std::pow(double(t), 3),
               T2 = double(t) * t;
  rep.preconditions = {
      {"M >= 2", cfg.M >= 2},
      {"p > (n+M)T", cfg.p > nM * t},
      {"p > T^2(n+M)M", cfg.p > T2 * nM * cfg.M},
      {"p > 2T^3(n+M)^2", cfg.p > 2.0 * T3 * nM * nM},
      {"p > T^4(n+M)M", cfg.p > T4 * nM * cfg.M},
      {"p > 2T^4(n+M)nM", cfg.p > 2.0 * T4 * nM * cfg.n * cfg.M},
      {"p > 3T^4(n+M)nM", cfg.p > 3.0 * T4 * nM * cfg.n * cfg.M},
  };
  return rep;
}

// concrete stand-in for the order-level growth condition on p under which the
// orthonormal comparison is asserted
inline long long orthonormal_schedule_p(int T, int n, int M) {
  const long long t4 = 1LL * T * T * T * T;
  return 2LL * t4 * (n + M) * (n + M) * std::max(M, 1);
}

}  // namespace rehearsal
