#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kfp/certificate.hpp"
#include "kfp/certificate_validator.hpp"

using namespace kfp;

namespace {

validator::Input to_input(const Certificate& c) {
  const auto& k = c.constants;
  return {k.sigma1, k.sigma2, k.beta, k.gamma, k.omega, c.a, c.b, c.c, c.k, c.d, c.lambda, c.alpha};
}

Constants random_constants(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto maybe_zero = [&](double x) { return u(rng) < 0.15 ? 0.0 : x; };
  Constants k;
  k.sigma1 = maybe_zero(5.0 * u(rng));
  k.sigma2 = k.sigma1 + maybe_zero(20.0 * u(rng));
  k.beta = maybe_zero(50.0 * u(rng));
  k.gamma = maybe_zero(5.0 * u(rng));
  k.omega = maybe_zero(100.0 * u(rng));
  return k;
}

}  // namespace

TEST(Certificate, ClassicalByHand) {
  // s = 2, c = 1, T = 32/7; a_min = max(96/7, 16, 128/7) = 128/7, a = ceil(1.05 * 128/7) = 20
  // b = (3 + min(20 * 7/32, 4)) / 2 = 3.5, k = 20 * 18 + 2 * 3.5 * 1 * 3 + 1 = 382
  const Certificate c = make_certificate({1, 1, 0, 0, 0}, 1.0);
  EXPECT_EQ(c.a, 20.0);
  EXPECT_EQ(c.b, 3.5);
  EXPECT_EQ(c.c, 1.0);
  EXPECT_EQ(c.k, 382.0);
  EXPECT_EQ(c.coef_Ipp, -1.0);
  EXPECT_EQ(c.coef_Ixx, -0.5);
  EXPECT_DOUBLE_EQ(c.coef_Qpp, -8.0);
  EXPECT_DOUBLE_EQ(c.coef_Qxp, -0.21875);
  EXPECT_EQ(c.d, 0.5);
  EXPECT_EQ(c.M_bound, 23.5);
  EXPECT_DOUBLE_EQ(c.lambda, 0.5 / 382.0);
  EXPECT_NEAR(c.lambda, 1.31e-3, 5e-6);
  EXPECT_TRUE(c.valid);
  EXPECT_TRUE(validator::validate(to_input(c)).ok);
}

TEST(Certificate, MarginChangesLambdaButStaysValid) {
  const Certificate a = make_certificate({1, 1, 0, 0, 0}, 1.0, 0.05);
  const Certificate b = make_certificate({1, 1, 0, 0, 0}, 1.0, 0.5);
  EXPECT_NE(a.lambda, b.lambda);
  EXPECT_TRUE(validator::validate(to_input(a)).ok);
  EXPECT_TRUE(validator::validate(to_input(b)).ok);
}

TEST(Certificate, RejectsBadInput) {
  EXPECT_THROW(make_certificate({-0.1, 1, 0, 0, 0}, 1.0), InfeasibleRegion);
  EXPECT_THROW(make_certificate({1, 0.5, 0, 0, 0}, 1.0), ConfigError);
  EXPECT_THROW(make_certificate({1, 1, 0, 0, 0}, 0.0), InvalidCertificate);
  EXPECT_THROW(choose_abck({1, 1, 0, 0, 0}, 1.5), ConfigError);
  EXPECT_THROW(proposition_coefficients({1, 1, 0, 0, 0}, {20, 3.5, 1, 300}), InvalidCertificate);
  EXPECT_THROW(proposition_coefficients({1, 1, 0, 0, 0}, {20, 2.5, 1, 382}), InvalidCertificate);
}

TEST(Certificate, RandomAdmissibleTuplesPassTheValidator) {
  std::mt19937_64 rng(2024);
  int built = 0;
  for (int n = 0; n < 200; ++n) {
    const Constants k = random_constants(rng);
    const double alpha = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
    try {
      const Certificate c = make_certificate(k, alpha);
      const auto v = validator::validate(to_input(c));
      EXPECT_TRUE(v.ok) << (v.failures.empty() ? "" : v.failures.front());
      EXPECT_TRUE(c.valid);
      EXPECT_GT(c.lambda, 0.0);
      ++built;
    } catch (const InfeasibleRegion&) {
    }
  }
  EXPECT_EQ(built, 200);  // sigma1 >= 0 for every sampled tuple
}

TEST(Certificate, BoundsTableCombinesToUpperBoundCoefficients) {
  // k dD/dt + a dIpp/dt + 2b dIxp/dt + c dIxx/dt, bounded term by term with the default epsilons
  std::mt19937_64 rng(77);
  for (int n = 0; n < 200; ++n) {
    const Constants k = random_constants(rng);
    const ABCK x = choose_abck(k);
    const Epsilons e = epsilon_defaults(k, x.a);
    const BoundsTable t = lemma_bounds_rhs(e, k);
    const double ixx = x.a * t.pp[0] + 2 * x.b * t.xp[0] + x.c * t.xx[0];
    const double ipp = -x.k + x.a * t.pp[1] + 2 * x.b * t.xp[1] + x.c * t.xx[1];
    const double qpp = x.a * t.pp[2] + 2 * x.b * t.xp[2] + x.c * t.xx[2];
    const double qxp = x.a * t.pp[3] + 2 * x.b * t.xp[3] + x.c * t.xx[3];
    const PropositionCoefficients p = proposition_coefficients(k, x);
    const double tol = 1e-9 * (1 + x.k);
    EXPECT_NEAR(ipp, p.coef_Ipp, tol);
    EXPECT_NEAR(qpp, p.coef_Qpp, tol);
    EXPECT_NEAR(qxp, p.coef_Qxp, tol);
    if (k.gamma > 0.0 && !e.s1_zero)
      EXPECT_NEAR(ixx, p.coef_Ixx, tol);
    else
      EXPECT_LE(ixx, p.coef_Ixx + tol);
  }
}

TEST(Certificate, EpsilonsArePositive) {
  const Epsilons e = epsilon_defaults({1, 3, 2, 0.5, 4}, 50);
  for (int i = 1; i <= 10; ++i) EXPECT_GT(e[i], 0.0);
  EXPECT_DOUBLE_EQ(e[1], 0.01);
  EXPECT_DOUBLE_EQ(e[5], 0.25);
}

TEST(Validator, CatchesTamperedCertificates) {
  const Certificate c = make_certificate({1, 1, 0, 0, 0}, 1.0);
  auto in = to_input(c);
  in.lambda *= 1.01;
  EXPECT_FALSE(validator::validate(in).ok);
  in = to_input(c);
  in.b = 4.1;
  EXPECT_FALSE(validator::validate(in).ok);
  in = to_input(c);
  in.d = 0.4;
  EXPECT_FALSE(validator::validate(in).ok);
}
