#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rehearsal/montecarlo.hpp"
#include "rehearsal/problem.hpp"
#include "rehearsal/theory.hpp"

// Numeric verification of the scalar inequality lemmas behind the
// coefficient comparisons, plus the headline comparison theorems, over
// parameter grids.  A grid point is only asserted where the statement's own
// preconditions hold; other points are recorded as skipped with the violated
// precondition named.  Strict inequalities with margins inside the rounding
// slack are counted as marginal rather than failed.

namespace rehearsal {

struct check_point {
  std::map<std::string, double> params;
  bool asserted = false;
  bool passed = false;
  bool marginal = false;
  double margin = 0;  // LHS - RHS oriented so positive means the claim holds
  std::string skip_reason;
};

struct check_report {
  std::string name;
  std::string grid_description;
  std::vector<check_point> points;
  long asserted = 0, passed = 0, failed = 0, marginal = 0, skipped = 0;
  double worst_margin = std::numeric_limits<double>::infinity();

  void tally() {
    asserted = passed = failed = marginal = skipped = 0;
    worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
      if (!pt.asserted) {
        skipped += 1;
        continue;
      }
      asserted += 1;
      worst_margin = std::min(worst_margin, pt.margin);
      if (pt.marginal)
        marginal += 1;
      else if (pt.passed)
        passed += 1;
      else
        failed += 1;
    }
  }
};

namespace verify_detail {

constexpr double kSlack = 1e-12;

// (1 - x)^k through log1p, stable when comparing nearby products
inline double pow1m(double x, double k) { return std::exp(k * std::log1p(-x)); }

// prod_{l=0}^{t-2} (1 - M/((t-l-1)p))^{t-l-1} (1 - n/p); empty product for t < 2
inline double forgetting_product(double n, double p, double M, int t) {
  double acc = 1.0;
  for (int l = 0; l <= t - 2; ++l)
    acc *= pow1m(M / ((t - l - 1.0) * p), t - l - 1.0) * (1.0 - n / p);
  return acc;
}

struct outcome {
  bool holds = false;
  bool marginal = false;
  double margin = 0;
};

inline outcome strict_less(double lhs, double rhs) {
  outcome o;
  o.margin = rhs - lhs;
  const double slack = kSlack * std::abs(rhs);
  o.marginal = std::abs(o.margin) <= slack;
  o.holds = o.margin > slack;
  return o;
}

}  // namespace verify_detail

struct lemma_grid {
  std::vector<int> T_values{2, 3, 4, 5, 6};
  std::vector<int> n_values{4, 16, 64};
  std::vector<int> M_values{0, 2, 8, 24, 48};
  std::vector<double> p_factors{1.05, 4.0, 64.0};  // multiples of each lemma's threshold
  double p_cap = 1e5;
};

// Product and power bounds behind the strategy comparisons.  Each lemma is
// evaluated at every admissible (T, t, n, M, l/i, p) combination; p runs
// over multiples of the lemma's own threshold, capped.
inline check_report check_scalar_lemmas(const lemma_grid& grid = {}) {
  using namespace verify_detail;
  check_report rep;
  rep.name = "scalar_lemmas";
  rep.grid_description =
      "T in {2..6}, t in [2,T], n in {4..64}, M in {0..48}, p = multiples of each lemma's "
      "threshold up to 1e5";

  struct lemma_def {
    std::string name;
    bool needs_l;   // iterate l in [0, t-2] (else iterate i in [1, t-1])
    bool needs_index;
    std::function<double(double n, double p, double M, int T, int t, int idx)> threshold;
    std::function<outcome(double n, double p, double M, int T, int t, int idx)> eval;
  };

  std::vector<lemma_def> lemmas;

  lemmas.push_back({"prod_lower_bound", true, true,
                    [](double n, double, double M, int, int, int) { return n + M; },
                    [](double n, double p, double M, int, int t, int l) {
                      const double lhs = pow1m(M / ((t - l - 1.0) * p), t - l - 1.0) * (1.0 - n / p);
                      const double rhs = 1.0 - (n + M) / p;
                      outcome o = strict_less(rhs, lhs);  // claim: lhs > rhs
                      return o;
                    }});

  lemmas.push_back({"prod_upper_bound", true, true,
                    [](double n, double, double M, int T, int, int) {
                      return std::max(n + M, double(T) * M);
                    },
                    [](double n, double p, double M, int, int t, int l) {
                      const double lhs = pow1m(M / ((t - l - 1.0) * p), t - l - 1.0) * (1.0 - n / p);
                      const double rhs = 1.0 - (n + M) / p + (n + M) * M / (p * p);
                      return strict_less(lhs, rhs);
                    }});

  lemmas.push_back({"power_upper_bound", false, true,
                    [](double n, double, double M, int T, int, int) {
                      return (n + M) * (T + 1.0);
                    },
                    [](double n, double p, double M, int T, int t, int) {
                      const double base = 1.0 - (n + M) / p + (n + M) * M / (p * p);
                      const double lhs = std::pow(base, t);
                      const double rhs =
                          pow1m((n + M) / p, t) + double(T) * T * (n + M) * M / (p * p);
                      return strict_less(lhs, rhs);
                    }});

  lemmas.push_back({"power_upper_bound_tight", false, true,
                    [](double n, double, double M, int T, int, int) {
                      return (n + M) * (T + 1.0);
                    },
                    [](double n, double p, double M, int T, int t, int) {
                      const double base = 1.0 - (n + M) / p + (n + M) * M / (p * p);
                      const double lhs = std::pow(base, t);
                      const double rhs = pow1m((n + M) / p, t) + t * (n + M) * M / (p * p) +
                                         std::pow(double(T), 3) * (n + M) * (n + M) * M * M /
                                             (2.0 * std::pow(p, 4));
                      return strict_less(lhs, rhs);
                    }});

  lemmas.push_back({"prod_ratio_bound", true, true,
                    [](double n, double, double M, int T, int, int) {
                      if (M < 2) return std::numeric_limits<double>::infinity();
                      return std::max(n + M, double(T) * (n + M) * M / (M - 1.0) + n + M);
                    },
                    [](double n, double p, double M, int T, int t, int l) {
                      const double base = 1.0 - (n + M) / p + (n + M) * M / (p * p);
                      const double lhs =
                          std::pow(base, l) * pow1m(M / ((t - l - 1.0) * p), t - l - 1.0);
                      const double rhs = (1.0 - 1.0 / (T * p)) * pow1m((n + M) / p, double(l));
                      return strict_less(lhs, rhs);
                    }});

  lemmas.push_back({"forgetting_prod_lower", false, true,
                    [](double n, double, double M, int T, int, int) {
                      return std::max(n + M, 2.0 * std::pow(double(T), 3) * (n + M) * (n + M));
                    },
                    [](double n, double p, double M, int, int t, int i) {
                      const double lhs =
                          forgetting_product(n, p, M, t) - forgetting_product(n, p, M, i);
                      const double rhs =
                          pow1m((n + M) / p, t - 1.0) - pow1m((n + M) / p, i - 1.0);
                      return strict_less(rhs, lhs);  // claim: lhs > rhs
                    }});

  lemmas.push_back({"forgetting_prod_upper", false, true,
                    [](double n, double, double M, int T, int, int) { return (n + M) * T; },
                    [](double n, double p, double M, int T, int t, int i) {
                      const double lhs =
                          forgetting_product(n, p, M, t) - forgetting_product(n, p, M, i);
                      const double rhs =
                          pow1m((n + M) / p, i - 1.0) * (pow1m((n + M) / p, t - i) - 1.0) +
                          double(T) * T * (n + M) * M / (p * p);
                      return strict_less(lhs, rhs);
                    }});

  lemmas.push_back({"forgetting_prod_upper_tight", false, true,
                    [](double n, double, double M, int T, int, int) { return (n + M) * T; },
                    [](double n, double p, double M, int T, int t, int i) {
                      const double lhs =
                          forgetting_product(n, p, M, t) - forgetting_product(n, p, M, i);
                      const double rhs =
                          pow1m((n + M) / p, i - 1.0) * (pow1m((n + M) / p, t - i) - 1.0) +
                          (t - i) * (n + M) * M / (p * p) +
                          std::pow(double(T), 3) * (n + M) * (n + M) * M * M / std::pow(p, 4);
                      return strict_less(lhs, rhs);
                    }});

  for (const auto& lem : lemmas) {
    for (int T : grid.T_values)
      for (int t = 2; t <= T; ++t)
        for (int n : grid.n_values)
          for (int M : grid.M_values) {
            std::vector<int> indices;
            if (lem.needs_l)
              for (int l = 0; l <= t - 2; ++l) indices.push_back(l);
            else
              for (int i = 1; i < t; ++i) indices.push_back(i);
            for (int idx : indices) {
              const double thr = lem.threshold(n, 0, M, T, t, idx);
              for (double f : grid.p_factors) {
                check_point pt;
                pt.params = {{"T", double(T)}, {"t", double(t)},    {"n", double(n)},
                             {"M", double(M)}, {"idx", double(idx)}};
                pt.params["lemma"] = double(&lem - lemmas.data());
                if (M < 1) {
                  pt.skip_reason = lem.name + ": needs M >= 1";
                  rep.points.push_back(std::move(pt));
                  continue;
                }
                if (!std::isfinite(thr)) {
                  pt.skip_reason = lem.name + ": needs M >= 2";
                  rep.points.push_back(std::move(pt));
                  continue;
                }
                const double p = std::ceil(thr * f);
                if (p > grid.p_cap) {
                  pt.skip_reason = lem.name + ": threshold above p cap";
                  rep.points.push_back(std::move(pt));
                  continue;
                }
                pt.params["p"] = p;
                const outcome o = lem.eval(n, p, M, T, t, idx);
                pt.asserted = true;
                pt.margin = o.margin;
                pt.marginal = o.marginal;
                pt.passed = o.holds || o.marginal;
                rep.points.push_back(std::move(pt));
              }
            }
          }
  }
  rep.tally();
  return rep;
}

// names the lemma a point came from, for reporting
inline std::vector<std::string> scalar_lemma_names() {
  return {"prod_lower_bound",      "prod_upper_bound",        "power_upper_bound",
          "power_upper_bound_tight", "prod_ratio_bound",        "forgetting_prod_lower",
          "forgetting_prod_upper", "forgetting_prod_upper_tight"};
}

// ---------------------------------------------------------------------------
// theorem-level checks
// ---------------------------------------------------------------------------

struct theorem_check_options {
  int grid_points = 10;       // per axis for the two-task iff grid
  std::uint64_t seed = 2024;  // geometry seed for orthonormal checks
};

inline check_report check_theorems(const theorem_check_options& opt = {}) {
  check_report rep;
  rep.name = "theorems";
  rep.grid_description = "two-task iff grid, sigma-zero thresholds, orthonormal comparison, "
                         "coefficient orderings";

  // two-task iff predicate vs the direct closed-form difference
  {
    problem_config cfg;
    cfg.T = 2;
    cfg.p = 500;
    cfg.n = 24;
    cfg.M = 24;
    for (int gi = 0; gi < opt.grid_points; ++gi)
      for (int si = 0; si < opt.grid_points; ++si) {
        const double gap = 0.05 + 3.8 * gi / (opt.grid_points - 1.0);
        const double sigma = 2.0 * si / (opt.grid_points - 1.0);
        cfg.sigma = sigma;
        ground_truth_view v = ground_truth_view::equal_gap(2, gap);
        const two_task_constants c = two_task(cfg, v);
        check_point pt;
        pt.params = {{"gap_sq", gap}, {"sigma", sigma}, {"which", 0}};
        pt.asserted = true;
        const double fdiff = c.F2_conc - c.F2_seq;
        pt.margin = std::abs(fdiff);
        pt.marginal = std::abs(fdiff) <= 1e-12 * std::max(std::abs(c.F2_conc), 1.0);
        pt.passed = pt.marginal || (c.forgetting_concurrent_worse == (fdiff > 0));
        rep.points.push_back(pt);

        check_point pg;
        pg.params = {{"gap_sq", gap}, {"sigma", sigma}, {"which", 1}};
        pg.asserted = true;
        const double gdiff = c.G2_conc - c.G2_seq;
        pg.margin = std::abs(gdiff);
        pg.marginal = std::abs(gdiff) <= 1e-12 * std::max(std::abs(c.G2_conc), 1.0);
        pg.passed = pg.marginal || (c.generalization_concurrent_worse == (gdiff > 0));
        rep.points.push_back(pg);
      }
  }

  // sigma = 0 forgetting threshold is an exact root of the difference
  {
    problem_config cfg;
    cfg.T = 2;
    cfg.p = 500;
    cfg.n = 24;
    cfg.M = 24;
    cfg.sigma = 0;
    ground_truth_view probe = ground_truth_view::equal_gap(2, 1.0);
    const double root = two_task(cfg, probe).forgetting_gap_root_sigma0;
    ground_truth_view at_root = ground_truth_view::equal_gap(2, root);
    const two_task_constants c = two_task(cfg, at_root);
    check_point pt;
    pt.params = {{"root", root}};
    pt.asserted = true;
    pt.margin = std::abs(c.F2_conc - c.F2_seq);
    pt.passed = pt.margin < 1e-10;  // |w*_1|^2 = 1 here
    rep.points.push_back(pt);
  }

  // orthonormal ground truths at the large-p schedule: concurrent strictly
  // worse in both metrics, through both theory routes
  for (const auto& [T, n, M] : std::vector<std::array<int, 3>>{{4, 10, 4}, {3, 12, 6}, {5, 8, 2}}) {
    problem_config cfg;
    cfg.T = T;
    cfg.n = n;
    cfg.M = M;
    const long long sched = orthonormal_schedule_p(T, n, M);
    cfg.p = static_cast<int>(sched);
    cfg.sigma = 0;
    ground_truth_view v = ground_truth_view::equal_gap(T, 2.0);  // orthonormal geometry
    const theory_prediction conc = predict_recursive(cfg, v, strategy_kind::concurrent);
    const theory_prediction seq = predict_recursive(cfg, v, strategy_kind::sequential);
    const coefficient_table tc = predict_coefficients(cfg, strategy_kind::concurrent);
    const coefficient_table ts = predict_coefficients(cfg, strategy_kind::sequential);
    const theory_prediction conc2 = assemble_from_coefficients(tc, v, cfg.sigma);
    const theory_prediction seq2 = assemble_from_coefficients(ts, v, cfg.sigma);
    check_point pt;
    pt.params = {{"T", double(T)}, {"n", double(n)}, {"M", double(M)}, {"p", double(cfg.p)}};
    pt.asserted = true;
    pt.margin = std::min(std::min(conc.F - seq.F, conc.G - seq.G),
                         std::min(conc2.F - seq2.F, conc2.G - seq2.G));
    pt.passed = pt.margin > 0;
    rep.points.push_back(pt);
  }

  // coefficient orderings: asserted only where each family's comparison
  // regime holds.  At the simulation scale (t=5, p=500) the c_ijk family
  // sits below its p > 3T^4(n+M)nM regime and genuinely reverses for a few
  // entries, so that point is recorded as skipped rather than asserted.
  {
    problem_config cfg;
    cfg.p = 500;
    cfg.n = 24;
    cfg.M = 24;
    cfg.T = 5;
    struct ordering_case {
      int t;
      int p;
    };
    for (const auto& oc : std::vector<ordering_case>{{2, 500}, {5, 500}, {5, 1200000000}}) {
      problem_config c = cfg;
      c.p = oc.p;
      const ordering_report ord = coefficient_orderings(c, oc.t);
      bool full_regime = true;
      for (const auto& [name, holds] : ord.preconditions)
        if (name == "p > 3T^4(n+M)nM") full_regime = holds;
      for (const auto& fam : ord.families) {
        check_point pt;
        pt.params = {{"t", double(oc.t)}, {"p", double(oc.p)}, {"M", double(c.M)}};
        const bool needs_full_regime = fam.name.rfind("c_ijk", 0) == 0;
        if (needs_full_regime && !full_regime) {
          pt.skip_reason = fam.name + ": below the p > 3T^4(n+M)nM regime (" +
                           std::to_string(fam.violations) + " reversals recorded)";
          rep.points.push_back(pt);
          continue;
        }
        pt.asserted = true;
        pt.margin = fam.worst_margin;
        pt.passed = fam.violations == 0;
        rep.points.push_back(pt);
      }
    }
    problem_config memoryless = cfg;
    memoryless.M = 0;
    const ordering_report ord = coefficient_orderings(memoryless, 5);
    check_point pt;
    pt.params = {{"t", 5.0}, {"M", 0.0}};
    pt.asserted = true;
    bool all_tie = true;
    for (const auto& fam : ord.families)
      all_tie &= fam.violations == 0 && fam.ties > 0 && !fam.strict;
    pt.passed = all_tie;
    rep.points.push_back(pt);
  }

  rep.tally();
  return rep;
}

}  // namespace rehearsal
