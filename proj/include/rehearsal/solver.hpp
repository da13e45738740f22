#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rehearsal/errors.hpp"

namespace rehearsal {

// Minimum-norm interpolation: the convergence point of SGD on MSE from a
// given start.  Solved exactly through the m x m Gram system,
//   w = w_start + X (X^T X)^{-1} (Y - X^T w_start),
// with a pivoted QR fallback when the Gram system is ill conditioned.
struct solver_options {
  double cond_fallback = 1e8;  // switch to QR above this Gram condition
  double cond_max = 1e12;      // declare the draw degenerate above this
};

struct fit_result {
  Eigen::VectorXd w;
  double residual_norm = 0;  // |X^T w - Y|_inf after the fit
  double conditioning = 1;   // estimate of the Gram system's condition number
};

inline double fit_tolerance(const Eigen::VectorXd& Y) {
  return 1e-8 * (1.0 + (Y.size() ? Y.cwiseAbs().maxCoeff() : 0.0));
}

inline fit_result min_norm_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                               const Eigen::VectorXd& w_start,
                               const solver_options& opt = {}) {
  const auto m = X.cols();
  if (Y.size() != m) throw dimension_mismatch("Y size must equal the column count of X");
  if (X.rows() != w_start.size()) throw dimension_mismatch("w_start size must equal p");
  if (m >= X.rows()) throw dimension_mismatch("needs the underdetermined case m < p");

  fit_result out;
  if (m == 0) {
    out.w = w_start;
    return out;
  }

  const Eigen::VectorXd r = Y - X.transpose() * w_start;
  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  double cond = std::numeric_limits<double>::infinity();
  if (llt.info() == Eigen::Success) {
    const double rc = llt.rcond();
    cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  }
  out.conditioning = cond;

  if (cond <= opt.cond_fallback) {
    out.w = w_start + X * llt.solve(r);
  } else {
    // pivoted orthogonal factorization of X itself; cond(gram) = cond(X)^2
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const auto& qrdiag = qr.matrixR().diagonal();
    const double dmax = qrdiag.cwiseAbs().maxCoeff();
    const double dmin = qrdiag.cwiseAbs().minCoeff();
    const double qr_cond = (dmin > 0) ? (dmax / dmin) * (dmax / dmin)
                                      : std::numeric_limits<double>::infinity();
    out.conditioning = std::min(cond, qr_cond);
    if (out.conditioning > opt.cond_max) throw singular_gram(out.conditioning);

    // X P = Q R with Q p x m orthonormal; the constraint becomes
    // Q^T w = R^{-T} P^T Y, and the closest solution to w_start follows
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), m);
    Eigen::MatrixXd rmat = qr.matrixR().topRows(m).template triangularView<Eigen::Upper>();
    Eigen::VectorXd yp = qr.colsPermutation().transpose() * Y;
    Eigen::VectorXd c = rmat.transpose().triangularView<Eigen::Lower>().solve(yp);
    out.w = w_start + q * (c - q.transpose() * w_start);
  }

  out.residual_norm = (X.transpose() * out.w - Y).cwiseAbs().maxCoeff();
  return out;
}

// P_X v = X (X^T X)^{-1} X^T v
inline Eigen::VectorXd project(const Eigen::MatrixXd& X, const Eigen::VectorXd& v,
                               const solver_options& opt = {}) {
  const auto m = X.cols();
  if (X.rows() != v.size()) throw dimension_mismatch("v size must equal p");
  if (m >= X.rows()) throw dimension_mismatch("needs the underdetermined case m < p");
  if (m == 0) return Eigen::VectorXd::Zero(v.size());

  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  double cond = std::numeric_limits<double>::infinity();
  if (llt.info() == Eigen::Success) {
    const double rc = llt.rcond();
    cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  }
  if (cond <= opt.cond_fallback) return X * llt.solve(X.transpose() * v);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const auto& qrdiag = qr.matrixR().diagonal();
  const double dmax = qrdiag.cwiseAbs().maxCoeff();
  const double dmin = qrdiag.cwiseAbs().minCoeff();
  const double qr_cond =
      (dmin > 0) ? (dmax / dmin) * (dmax / dmin) : std::numeric_limits<double>::infinity();
  if (std::min(cond, qr_cond) > opt.cond_max) throw singular_gram(std::min(cond, qr_cond));
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), m);
  return q * (q.transpose() * v);
}

}  // namespace rehearsal
