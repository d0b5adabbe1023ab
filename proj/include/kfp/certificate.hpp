#pragma once

// Modified-entropy certificate: the constants of
//   E[h] = k D[h] + a Ipp[h] + 2b Ixp[h] + c Ixx[h]
// and an explicit decay rate lambda with dE/dt <= -lambda E.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp {

struct Constants {
  double sigma1 = 0.0, sigma2 = 0.0, beta = 0.0, gamma = 0.0, omega = 0.0;
};

struct Epsilons {
  std::array<double, 10> eps{};  // eps[0] = epsilon_1, ...
  bool gamma_terms_absent = false;  // gamma = 0: epsilon_5 unused
  bool s1_zero = false;             // sigma2 + beta + omega = 0: epsilon_2,3,6,7 unbounded

  double operator[](int i) const { return eps[static_cast<std::size_t>(i - 1)]; }  // 1-based
};

/// The epsilon choices used in the proof of the upper bound.
inline Epsilons epsilon_defaults(const Constants& k, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("epsilon_defaults: a must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  const double s = 2.0 + k.beta + 16.0 * k.gamma + k.omega;
  const double s1 = k.sigma2 + k.beta + k.omega;
  Epsilons e;
  e.s1_zero = s1 == 0.0;
  e.gamma_terms_absent = k.gamma == 0.0;
  const double e2 = e.s1_zero ? inf : 1.0 / (4.0 * s1);
  e.eps = {1.0 / (2.0 * a), e2, e2, 8.0 / 7.0 * s, e.gamma_terms_absent ? inf : 1.0 / (8.0 * k.gamma), e2, e2, 4.0, 0.5, 0.5};
  return e;
}

/// Right-hand sides of the three differential inequalities, as coefficients of
/// (Ixx, Ipp, Q2pp, Q2xp).
struct BoundsTable {
  std::array<double, 4> pp{}, xp{}, xx{};
};

inline BoundsTable lemma_bounds_rhs(const Epsilons& e, const Constants& k) {
  const double sigma = k.sigma2 - k.sigma1;
  // x/eps with x = 0 and eps = inf is 0; terms multiplied by a zero constant drop
  auto over = [](double x, double eps) { return x == 0.0 ? 0.0 : x / eps; };
  auto times = [](double eps, double x) { return x == 0.0 ? 0.0 : eps * x; };
  BoundsTable t;
  t.pp = {2.0 * e[1], 1.0 / (2.0 * e[1]) - 2.0 * k.sigma1, -2.0, 0.0};
  t.xp = {times(e[2], sigma) + times(e[3], k.sigma1) + 2.0 * times(e[5], k.gamma) + times(e[7], k.omega) +
              times(e[6], k.beta) - 1.0,
          0.25 * (over(sigma, e[2]) + over(k.sigma1, e[3]) + 1.0 / e[6] + 1.0 / e[7]),
          2.0 * e[4] + (e.gamma_terms_absent ? 0.0 : 1.0 / (2.0 * e[5])), 1.0 / (2.0 * e[4])};
  t.xx = {4.0 * e[8] * k.gamma + 1.0 / (2.0 * e[9]) + 2.0 * e[9] * k.beta + 2.0 * e[10] * k.omega + 1.0 / (2.0 * e[10]),
          0.0, 0.0, 1.0 / e[8] - 2.0};
  return t;
}

struct Certificate {
  Constants constants;
  double margin = 0.05;
  Epsilons eps;
  double s = 0, s1 = 0, s2 = 0;
  double a = 0, b = 0, c = 0, k = 0;
  double coef_Ipp = 0, coef_Ixx = 0, coef_Qpp = 0, coef_Qxp = 0;
  double d = 0;
  double M_bound = 0;
  double alpha = 0;
  double lambda = 0;
  bool valid = false;
  std::vector<std::string> diagnostics;
};

struct ABCK {
  double a, b, c, k;
};

inline void check_constants(const Constants& k) {
  if (k.sigma1 < 0.0) throw InfeasibleRegion("sigma1 < 0: the curvature lower bound fails");
  if (!(k.sigma2 >= k.sigma1) || !(k.beta >= 0.0) || !(k.gamma >= 0.0) || !(k.omega >= 0.0) || !std::isfinite(k.sigma2) ||
      !std::isfinite(k.beta) || !std::isfinite(k.gamma) || !std::isfinite(k.omega))
    throw ConfigError("constants must satisfy sigma2 >= sigma1 >= 0 and beta, gamma, omega >= 0 (finite)");
}

/// Deterministic choice of (a, b, c, k):
///   c = 2/s,
///   a = ceil((1 + margin) * max((1+cs)T, 4 s^2 c, 2cs T)),  T = 16s/7 + 4 gamma,
///   b = midpoint of (1 + cs, min(a/T, 2cs)),
///   k = a(a - 2 sigma1) + 2 b s1 s2 + 1.
inline ABCK choose_abck(const Constants& k, double margin = 0.05) {
  check_constants(k);
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin must lie in (0, 1)");
  const double s = 2.0 + k.beta + 16.0 * k.gamma + k.omega;
  const double s1 = k.sigma2 + k.beta + k.omega;
  const double s2 = 2.0 + k.sigma2;
  const double T = 16.0 * s / 7.0 + 4.0 * k.gamma;
  const double c = 2.0 / s;
  const double cs = c * s;
  const double a_min = std::max({(1.0 + cs) * T, 4.0 * s * s * c, 2.0 * cs * T});
  const double a = std::ceil((1.0 + margin) * a_min);
  const double lo = 1.0 + cs;
  const double hi = std::min(a / T, 2.0 * cs);
  const double b = 0.5 * (lo + hi);
  const double kk = a * (a - 2.0 * k.sigma1) + 2.0 * b * s1 * s2 + 1.0;
  return {a, b, c, kk};
}

struct PropositionCoefficients {
  double coef_Ipp, coef_Ixx, coef_Qpp, coef_Qxp, d;
};

/// The four bracketed coefficients of the bound on dE/dt and d = min(-coef_Ipp, -coef_Ixx).
/// Throws InvalidCertificate naming the first violated sign condition.
inline PropositionCoefficients proposition_coefficients(const Constants& k, const ABCK& x) {
  const double s = 2.0 + k.beta + 16.0 * k.gamma + k.omega;
  const double s1 = k.sigma2 + k.beta + k.omega;
  const double s2 = 2.0 + k.sigma2;
  PropositionCoefficients p;
  p.coef_Ipp = -x.k + x.a * (x.a - 2.0 * k.sigma1) + 2.0 * x.b * s1 * s2;
  p.coef_Ixx = 1.0 + x.c * s - x.b;
  p.coef_Qpp = 2.0 * (x.b * (16.0 * s / 7.0 + 4.0 * k.gamma) - x.a);
  p.coef_Qxp = 1.75 * (x.b / (2.0 * s) - x.c);
  if (!(p.coef_Ipp < 0.0)) throw InvalidCertificate("coefficient of Ipp is not negative (k too small)");
  if (!(p.coef_Ixx < 0.0)) throw InvalidCertificate("coefficient of Ixx is not negative (need b > 1 + cs)");
  if (!(p.coef_Qpp <= 0.0)) throw InvalidCertificate("coefficient of Q2pp is positive (need b < a/(16s/7 + 4 gamma))");
  if (!(p.coef_Qxp <= 0.0)) throw InvalidCertificate("coefficient of Q2xp is positive (need b < 2cs)");
  p.d = std::min(-p.coef_Ipp, -p.coef_Ixx);
  return p;
}

/// lambda = min(d / (2 M), d alpha / k), M = max(a + b, b + c).
/// From dE/dt <= -d(Ipp + Ixx) <= -(d/2)(Ipp + Ixx) - d alpha D (log-Sobolev)
/// and E <= k D + M (Ipp + Ixx).
inline double assemble_lambda(const ABCK& x, double d, double alpha) {
  if (!(alpha > 0.0)) throw InvalidCertificate("alpha must be positive");
  const double M = std::max(x.a + x.b, x.b + x.c);
  return std::min(d / (2.0 * M), d * alpha / x.k);
}

/// Full pipeline from constants to certificate.
inline Certificate make_certificate(const Constants& k, double alpha, double margin = 0.05) {
  Certificate cert;
  cert.constants = k;
  cert.margin = margin;
  cert.alpha = alpha;
  const ABCK x = choose_abck(k, margin);
  cert.s = 2.0 + k.beta + 16.0 * k.gamma + k.omega;
  cert.s1 = k.sigma2 + k.beta + k.omega;
  cert.s2 = 2.0 + k.sigma2;
  cert.a = x.a;
  cert.b = x.b;
  cert.c = x.c;
  cert.k = x.k;
  cert.eps = epsilon_defaults(k, x.a);
  const PropositionCoefficients p = proposition_coefficients(k, x);
  cert.coef_Ipp = p.coef_Ipp;
  cert.coef_Ixx = p.coef_Ixx;
  cert.coef_Qpp = p.coef_Qpp;
  cert.coef_Qxp = p.coef_Qxp;
  cert.d = p.d;
  cert.M_bound = std::max(x.a + x.b, x.b + x.c);
  cert.lambda = assemble_lambda(x, p.d, alpha);
  cert.valid = cert.lambda > 0.0 && x.b <= std::sqrt(x.a * x.c);
  if (cert.eps.gamma_terms_absent) cert.diagnostics.push_back("gamma = 0: epsilon_5 terms dropped");
  if (cert.eps.s1_zero) cert.diagnostics.push_back("sigma2 + beta + omega = 0: epsilon_2,3,6,7 unbounded");
  return cert;
}

}  // namespace kfp
