#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rehearsal/errors.hpp"
#include "rehearsal/rng.hpp"

namespace rehearsal {

// the scalar regime of one continual-learning problem
struct problem_config {
  int p = 500;       // ambient dimension
  int n = 24;        // samples per task
  int M = 24;        // total memory size
  int T = 5;         // number of tasks
  double sigma = 0;  // noise standard deviation

  // throws config_invalid naming the offending field
  void validate() const {
    if (T < 1) throw config_invalid("T", "need T >= 1");
    if (n < 1) throw config_invalid("n", "need n >= 1");
    if (M < 0) throw config_invalid("M", "need M >= 0");
    if (sigma < 0) throw config_invalid("sigma", "need sigma >= 0");
    if (p <= n + M)
      throw config_invalid("p", "overparameterization requires p > n + M (p=" + std::to_string(p) +
                                    ", n+M=" + std::to_string(n + M) + ")");
  }

  // closed-form noise/interference terms divide by p - n - M - 1
  bool closed_form_domain() const { return p > n + M + 1; }
};

enum class ground_truth_kind { equal_gap, orthonormal, explicit_vectors };

inline const char* to_string(ground_truth_kind k) {
  switch (k) {
    case ground_truth_kind::equal_gap: return "equal_gap";
    case ground_truth_kind::orthonormal: return "orthonormal";
    default: return "explicit";
  }
}

// the T true parameter vectors and their pairwise squared-distance matrix
struct ground_truth_set {
  Eigen::MatrixXd vectors;     // p x T, one column per task
  Eigen::MatrixXd gap_matrix;  // T x T, gap_matrix(j,k) = |w*_j - w*_k|^2
  ground_truth_kind kind = ground_truth_kind::explicit_vectors;
  std::uint64_t seed = 0;

  int tasks() const { return static_cast<int>(vectors.cols()); }
  int dim() const { return static_cast<int>(vectors.rows()); }

  // squared norm of task i's ground truth, 1-based
  double sq_norm(int task) const { return vectors.col(task - 1).squaredNorm(); }
  // squared gap between tasks j and k, 1-based
  double gap(int j, int k) const { return gap_matrix(j - 1, k - 1); }
};

// norms and gaps alone determine every closed-form prediction, so the theory
// layer accepts this reduced view; it can be synthesized without any vectors
// (e.g. for p = 1e6 asymptotics).
struct ground_truth_view {
  std::vector<double> sq_norms;  // index i-1 for task i
  Eigen::MatrixXd gaps;          // T x T

  int tasks() const { return static_cast<int>(sq_norms.size()); }
  double sq_norm(int task) const { return sq_norms[static_cast<std::size_t>(task - 1)]; }
  double gap(int j, int k) const { return gaps(j - 1, k - 1); }

  static ground_truth_view of(const ground_truth_set& gt) {
    ground_truth_view v;
    const int T = gt.tasks();
    v.sq_norms.resize(static_cast<std::size_t>(T));
    for (int i = 1; i <= T; ++i) v.sq_norms[static_cast<std::size_t>(i - 1)] = gt.sq_norm(i);
    v.gaps = gt.gap_matrix;
    return v;
  }

  // unit-norm tasks with one common squared gap; no vectors needed
  static ground_truth_view equal_gap(int T, double gap_sq) {
    ground_truth_view v;
    v.sq_norms.assign(static_cast<std::size_t>(T), 1.0);
    v.gaps = Eigen::MatrixXd::Constant(T, T, gap_sq);
    v.gaps.diagonal().setZero();
    return v;
  }
};

inline Eigen::MatrixXd recompute_gap_matrix(const Eigen::MatrixXd& vectors) {
  const int T = static_cast<int>(vectors.cols());
  Eigen::MatrixXd g(T, T);
  for (int j = 0; j < T; ++j) {
    g(j, j) = 0.0;
    for (int k = j + 1; k < T; ++k) {
      const double d = (vectors.col(j) - vectors.col(k)).squaredNorm();
      g(j, k) = d;
      g(k, j) = d;
    }
  }
  return g;
}

namespace detail {

// orthonormal basis of a random r-dimensional subspace of R^p, seeded
inline Eigen::MatrixXd random_orthonormal(int p, int r, rng& g) {
  Eigen::MatrixXd a(p, r);
  g.fill_gaussian(a);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, r);
  // fix the sign convention so the result is a deterministic function of `a`
  const Eigen::MatrixXd& rmat = qr.matrixQR();
  for (int j = 0; j < r; ++j)
    if (rmat(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace detail

// Builds T unit-norm ground truths with the requested pairwise geometry.
// equal_gap realizes the common-gap Gram matrix (1 on the diagonal,
// 1 - gap_sq/2 off it) through its eigenfactorization, then plants the
// factor in a seeded random subspace of R^p so vectors sit in generic
// position. Feasibility: the Gram matrix is PSD iff gap_sq <= 2T/(T-1).
inline ground_truth_set generate_ground_truth(ground_truth_kind kind, int T, int p, double gap_sq,
                                              std::uint64_t seed) {
  if (T < 1) throw config_invalid("T", "need T >= 1");
  ground_truth_set out;
  out.kind = kind;
  out.seed = seed;
  rng g = rng::for_stream(seed, stream::geometry);

  if (kind == ground_truth_kind::orthonormal) {
    if (p < T)
      throw dimension_too_small("orthonormal ground truths need p >= T (p=" + std::to_string(p) +
                                ", T=" + std::to_string(T) + ")");
    out.vectors = detail::random_orthonormal(p, T, g);
  } else if (kind == ground_truth_kind::equal_gap) {
    if (p < T)
      throw dimension_too_small("equal-gap construction needs p >= T (p=" + std::to_string(p) +
                                ", T=" + std::to_string(T) + ")");
    if (gap_sq < 0) throw infeasible_gap("gap_sq must be nonnegative");
    const double limit = (T > 1) ? 2.0 * T / (T - 1.0) : std::numeric_limits<double>::infinity();
    if (T > 1 && gap_sq > limit - 1e-9)
      throw infeasible_gap("gap_sq = " + std::to_string(gap_sq) +
                           " makes the Gram matrix rank deficient or indefinite (limit 2T/(T-1) = " +
                           std::to_string(limit) + ")");

    const double c = 1.0 - gap_sq / 2.0;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(T, T, c);
    gram.diagonal().setOnes();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    // factor rows reproduce the Gram matrix exactly; negative eigenvalues can
    // only be roundoff here because feasibility was checked above
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd factor = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();  // T x T
    Eigen::MatrixXd q = detail::random_orthonormal(p, T, g);
    out.vectors = q * factor.transpose();  // p x T
  } else {
    throw config_invalid("kind", "explicit ground truths must be passed as vectors");
  }

  out.gap_matrix = recompute_gap_matrix(out.vectors);
  return out;
}

inline ground_truth_set make_explicit_ground_truth(const Eigen::MatrixXd& vectors,
                                                   std::uint64_t seed = 0) {
  ground_truth_set out;
  out.kind = ground_truth_kind::explicit_vectors;
  out.seed = seed;
  out.vectors = vectors;
  out.gap_matrix = recompute_gap_matrix(vectors);
  return out;
}

// one task's stacked samples: Y = X^T w*_source + z
struct task_dataset {
  Eigen::MatrixXd X;    // p x m, one column per sample
  Eigen::VectorXd Y;    // m
  int source_task = 0;  // 1-based index of the generating ground truth
  int m = 0;
};

inline task_dataset sample_task_dataset(const ground_truth_set& gt, int task, int m, double sigma,
                                        rng& g) {
  if (task < 1 || task > gt.tasks())
    throw config_invalid("task", "task index out of range [1, T]");
  if (m < 0) throw config_invalid("m", "need m >= 0");
  task_dataset d;
  d.source_task = task;
  d.m = m;
  d.X.resize(gt.dim(), m);
  g.fill_gaussian(d.X);
  d.Y = d.X.transpose() * gt.vectors.col(task - 1);
  for (int i = 0; i < m; ++i) d.Y[i] += sigma * g.gaussian();
  return d;
}

struct memory_allocation {
  std::vector<int> counts;    // per previous task h = 1..t-1
  bool non_integer = false;   // set when (t-1) does not divide M
};

// equal-as-possible split of M samples over the t-1 previous tasks,
// remainder to the oldest tasks first
inline memory_allocation allocate_memory(int M, int t) {
  if (t < 2) throw config_invalid("t", "memory allocation needs t >= 2");
  if (M < 0) throw config_invalid("M", "need M >= 0");
  memory_allocation a;
  const int buckets = t - 1;
  const int base = M / buckets;
  const int rem = M % buckets;
  a.counts.assign(static_cast<std::size_t>(buckets), base);
  for (int h = 0; h < rem; ++h) a.counts[static_cast<std::size_t>(h)] += 1;
  a.non_integer = rem != 0;
  return a;
}

// fresh memory: each chunk is newly sampled, never reused from training
struct memory_buffer {
  std::vector<task_dataset> per_task;  // index h-1 holds task h's chunk
  std::vector<int> counts;

  int total() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
  }
};

inline memory_buffer draw_memory(const ground_truth_set& gt, const std::vector<int>& counts,
                                 double sigma, rng& g) {
  memory_buffer buf;
  buf.counts = counts;
  buf.per_task.reserve(counts.size());
  for (std::size_t h = 0; h < counts.size(); ++h)
    buf.per_task.push_back(
        sample_task_dataset(gt, static_cast<int>(h) + 1, counts[h], sigma, g));
  return buf;
}

}  // namespace rehearsal
