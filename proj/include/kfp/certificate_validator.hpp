#pragma once

// Standalone re-check of a certificate. Recomputes every quantity from the raw
// constants and (a, b, c, k); deliberately does not call into certificate.hpp.

#include <cmath>
#include <string>
#include <vector>

namespace kfp::validator {

struct Input {
  double sigma1, sigma2, beta, gamma, omega;
  double a, b, c, k;
  double d;       // claimed
  double lambda;  // claimed
  double alpha;
};

struct Result {
  bool ok = true;
  std::vector<std::string> failures;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures.push_back(what);
    }
  }
};

inline Result validate(const Input& in) {
  Result r;
  const double S = in.beta + in.omega + 16.0 * in.gamma + 2.0;
  const double S1 = in.omega + in.beta + in.sigma2;
  const double S2 = in.sigma2 + 2.0;
  const double tq = (16.0 / 7.0) * S + 4.0 * in.gamma;

  r.require(in.sigma1 >= 0.0, "sigma1 >= 0");
  r.require(in.sigma2 >= in.sigma1, "sigma2 >= sigma1");
  r.require(in.a > 0.0 && in.b > 0.0 && in.c > 0.0 && in.k > 0.0, "a, b, c, k > 0");
  // region conditions
  r.require(in.b > 1.0 + in.c * S, "b > 1 + cs");
  r.require(in.b * tq < in.a, "b < a / (16s/7 + 4 gamma)");
  r.require(in.b < 2.0 * in.c * S, "b < 2cs");
  r.require(in.c * S > 1.0, "c > 1/s");
  r.require(in.a > (1.0 + in.c * S) * tq, "a > (1 + cs)(16s/7 + 4 gamma)");
  r.require(in.a > 4.0 * S * S * in.c, "a > 4 s^2 c");
  r.require(in.b * in.b <= in.a * in.c, "b <= sqrt(ac)");
  // bracketed coefficients
  const double cIpp = in.a * in.a - 2.0 * in.a * in.sigma1 + 2.0 * in.b * S1 * S2 - in.k;
  const double cIxx = 1.0 - in.b + in.c * S;
  const double cQpp = 2.0 * in.b * tq - 2.0 * in.a;
  const double cQxp = (7.0 / 8.0) * in.b / S - (7.0 / 4.0) * in.c;
  r.require(cIpp < 0.0, "coefficient of Ipp < 0");
  r.require(cIxx < 0.0, "coefficient of Ixx < 0");
  r.require(cQpp <= 0.0, "coefficient of Q2pp <= 0");
  r.require(cQxp <= 0.0, "coefficient of Q2xp <= 0");
  const double d = -cIpp < -cIxx ? -cIpp : -cIxx;
  r.require(d > 0.0, "d > 0");
  r.require(std::abs(d - in.d) <= 1e-12 * (1.0 + std::abs(d)), "d matches min(-coef_Ipp, -coef_Ixx)");
  // lambda: both halves of the bound chain must hold with the claimed value
  const double Mb = in.b + (in.a > in.c ? in.a : in.c);
  r.require(in.lambda > 0.0, "lambda > 0");
  r.require(in.lambda * Mb <= 0.5 * d * (1.0 + 1e-12), "lambda M <= d/2");
  r.require(in.lambda * in.k <= d * in.alpha * (1.0 + 1e-12), "lambda k <= d alpha");
  return r;
}

}  // namespace kfp::validator
