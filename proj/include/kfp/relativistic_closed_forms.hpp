#pragma once

// Closed-form tensors of the three-dimensional relativistic model, written as
// functions of p and p0 = sqrt(1 + |p|^2). Used as oracles for the numerical
// geometry engine.

#include <array>
#include <cmath>

#include "kfp/linalg.hpp"

namespace kfp::relativistic {

inline double p0_of(const Vec& p) { return std::sqrt(1.0 + p.squaredNorm()); }

inline Mat metric(const Vec& p) {
  const double p0 = p0_of(p);
  return p0 * (Mat::Identity(p.size(), p.size()) - p * p.transpose() / (p0 * p0));
}

inline Mat metric_inverse(const Vec& p) {
  const double p0 = p0_of(p);
  return (Mat::Identity(p.size(), p.size()) + p * p.transpose()) / p0;
}

inline double weight_u(const Vec& p, double theta) {
  const double p0 = p0_of(p);
  return std::exp(-theta * p0) / std::sqrt(p0);
}

inline Mat form_A(const Vec& p) {
  const double p0 = p0_of(p);
  return (Mat::Identity(p.size(), p.size()) - p * p.transpose() / (p0 * p0)) / std::pow(p0, 3);
}

inline Mat form_B(const Vec& p) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0, q4 = q2 * q2, q6 = q4 * q2, q8 = q4 * q4;
  const Mat I = Mat::Identity(3, 3);
  return (496 * q6 - 9030 * q4 + 1035 * q2 - 25) / (16 * std::pow(p0, 13)) * I +
         (25 - 1035 * q2 + 10551 * q4 + 1610 * q6 + 729 * q8) / (16 * std::pow(p0, 10)) * form_A(p);
}

inline Mat form_C(const Vec& p) {
  const double p0 = p0_of(p);
  return 9.0 / (4 * std::pow(p0, 6)) * Mat::Identity(3, 3) + 9.0 * (2 * p0 * p0 - 3) / (4 * std::pow(p0, 3)) * form_A(p);
}

inline Mat form_R(const Vec& p, double theta) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0;
  const double pre = (1 + 2 * theta * p0) * (1 + 2 * theta * p0) / (16 * std::pow(p0, 9));
  return pre * (16 * (q2 - 1) * Mat::Identity(3, 3) + std::pow(p0, 3) * (9 * q2 * q2 - 34 * q2 + 25) * form_A(p));
}

inline Mat ricci(const Vec& p) {
  const double p0 = p0_of(p);
  return (3 * Mat::Identity(3, 3) - (4 + 15 * p0 * p0) / p0 * metric(p)) / (4 * p0 * p0);
}

inline Mat hessian_log_u(const Vec& p, double theta) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0;
  return ((4 + 4 * theta * p0) * Mat::Identity(3, 3) -
          (3 + 3 * q2 + 2 * theta * p0 * (1 + 3 * q2)) / p0 * metric(p)) /
         (4 * q2);
}

inline Mat bakry_emery_ricci(const Vec& p, double theta) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0;
  return (-(1 + 4 * theta * p0) * Mat::Identity(3, 3) +
          (6 * theta * q2 * p0 - 12 * q2 + 2 * theta * p0 - 1) / p0 * metric(p)) /
         (4 * q2);
}

/// A_IJ, the inverse of the A form: p0^3 (delta + p p^T).
inline Mat form_A_lower(const Vec& p) {
  const double p0 = p0_of(p);
  return std::pow(p0, 3) * (Mat::Identity(3, 3) + p * p.transpose());
}

/// Ricci tensor of the product metric G = g (+) A_IJ, in the coordinate order (p, x).
inline Mat ricci_product(const Vec& p) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0, q3 = q2 * p0;
  Mat out = Mat::Zero(6, 6);
  out.block(3, 3, 3, 3) = 6.5 * q2 * Mat::Identity(3, 3) - (19 * q2 - 7) / q3 * form_A_lower(p);
  out.block(0, 0, 3, 3) = 1.5 / q2 * Mat::Identity(3, 3) - (25 * q2 - 3) / (2 * q3) * metric(p);
  return out;
}

/// Hessian (with respect to G) of log U, U = u / sqrt(det A_IJ), coordinate order (p, x).
inline Mat hessian_log_U(const Vec& p, double theta) {
  const double p0 = p0_of(p);
  const double q2 = p0 * p0, q3 = q2 * p0;
  Mat out = Mat::Zero(6, 6);
  out.block(3, 3, 3, 3) =
      (23 + 2 * theta * p0) / 4 * (2 * q2 * Mat::Identity(3, 3) - (5 * q2 - 2) / q3 * form_A_lower(p));
  out.block(0, 0, 3, 3) = (23 + theta * p0) / q2 * Mat::Identity(3, 3) -
                          (6 * theta * q3 + 69 * q2 + 2 * theta * p0 + 69) / (4 * q3) * metric(p);
  return out;
}

}  // namespace kfp::relativistic
