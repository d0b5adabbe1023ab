#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kfp/errors.hpp"

namespace kfp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kGenEigShift = 1e-12;

struct GenEigResult {
  Vec values;          // ascending
  double shift = 0.0;  // diagonal shift added to the right-hand form, 0 if none was needed
};

/// Eigenvalues of the pencil (L, R): L x = lambda R x, with R symmetric positive definite.
/// If R fails the Cholesky factorization it is shifted by 1e-12 on the diagonal once;
/// if it still fails, DegenerateA is raised.
inline GenEigResult generalized_eigenvalues(const Mat& L, const Mat& R) {
  GenEigResult out;
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
    out.shift = kGenEigShift;
    llt.compute(R + kGenEigShift * Mat::Identity(R.rows(), R.cols()));
    if (llt.info() != Eigen::Success) throw DegenerateA("right-hand form is not positive definite");
  }
  const Mat Linv = llt.matrixL().solve(Mat::Identity(R.rows(), R.cols()));
  Mat C = Linv * (0.5 * (L + L.transpose())) * Linv.transpose();
  C = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
  out.values = es.eigenvalues();
  return out;
}

inline bool is_positive_definite(const Mat& A) {
  Eigen::LLT<Mat> llt(A);
  return llt.info() == Eigen::Success;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// max_ij |a_ij - b_ij| / max(1, |b_ij|)
inline double max_rel_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
  return m;
}

}  // namespace kfp
