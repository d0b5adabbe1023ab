#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kfp/jet.hpp"

using namespace kfp;

namespace {

// f(x, y) = exp(x y) sin(x) / (1 + y^2), with partials worked out by hand
double f_val(double x, double y) { return std::exp(x * y) * std::sin(x) / (1 + y * y); }

Jet f_jet(const std::vector<Jet>& v) { return exp(v[0] * v[1]) * sin(v[0]) / (1.0 + v[1] * v[1]); }

double fd2(double (*f)(double, double), double x, double y, int i, int j, double h) {
  auto e = [&](int di, int dj) { return f(x + h * (i == 0 ? di : 0) + h * (j == 0 ? dj : 0), y + h * (i == 1 ? di : 0) + h * (j == 1 ? dj : 0)); };
  return (e(1, 1) - e(1, -1) - e(-1, 1) + e(-1, -1)) / (4 * h * h);
}

}  // namespace

TEST(Jet, FirstDerivativesByHand) {
  const double x = 0.3, y = -0.7;
  const std::array<double, 2> p{x, y};
  const auto v = Jet::variables(p, 3);
  const Jet f = f_jet(v);
  const double q = 1 + y * y;
  const double fx = std::exp(x * y) * (y * std::sin(x) + std::cos(x)) / q;
  const double fy = std::exp(x * y) * std::sin(x) * (x * q - 2 * y) / (q * q);
  EXPECT_NEAR(f.value(), f_val(x, y), 1e-15);
  EXPECT_NEAR(f.d1(0), fx, 1e-14);
  EXPECT_NEAR(f.d1(1), fy, 1e-14);
}

TEST(Jet, SecondDerivativesAgainstFiniteDifferences) {
  const double x = 0.3, y = -0.7;
  const std::array<double, 2> p{x, y};
  const Jet f = f_jet(Jet::variables(p, 3));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(f.d2(i, j), fd2(f_val, x, y, i, j, 1e-4), 1e-6);
}

TEST(Jet, ThirdDerivativeOfPolynomial) {
  const std::array<double, 2> p{1.5, 2.0};
  const auto v = Jet::variables(p, 3);
  const Jet f = v[0] * v[0] * v[1] + 4.0 * v[1] * v[1] * v[1];
  EXPECT_DOUBLE_EQ(f.d3(0, 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(f.d3(1, 1, 1), 24.0);
  EXPECT_DOUBLE_EQ(f.d3(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(f.d2(0, 1), 3.0);
}

TEST(Jet, InertCoordinatesHaveZeroDerivative) {
  const std::array<double, 1> p{0.4};
  const Jet f = sin(Jet::variables(p, 2)[0]);
  EXPECT_EQ(f.d(2).value(), 0.0);
  EXPECT_EQ(f.d1(3), 0.0);
  EXPECT_NEAR(f.d(0).value(), std::cos(0.4), 1e-15);
}

TEST(Jet, AlgebraicIdentitiesOnRandomJets) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 0; n < 100; ++n) {
    const std::array<double, 3> p{u(rng), u(rng), u(rng)};
    const auto v = Jet::variables(p, 3);
    const Jet a = 2.0 + v[0] * v[1] + sin(v[2]);
    const Jet b = 1.5 + cos(v[0] * v[2]);
    const Jet checks[] = {(a * b) / b - a, log(exp(a)) - a, sqrt(a) * sqrt(a) - a, pow(a, 1.5) * pow(a, -1.5) - 1.0,
                          sin(a) * sin(a) + cos(a) * cos(a) - 1.0};
    for (const Jet& c : checks)
      for (int k = 0; k < c.terms(); ++k) EXPECT_NEAR(c.coeff(k), 0.0, 1e-12);
  }
}

TEST(Jet, OrderIsMinimumOfOperands) {
  const std::array<double, 2> p{0.1, 0.2};
  const Jet a = Jet::variables(p, 3)[0];
  const Jet b = Jet::variables(p, 1)[1];
  EXPECT_EQ((a * b).order(), 1);
  EXPECT_EQ(a.d(0).order(), 2);
}

TEST(Jet, DomainErrors) {
  const std::array<double, 1> p{-1.0};
  const Jet x = Jet::variables(p, 2)[0];
  EXPECT_THROW(log(x), DomainError);
  EXPECT_THROW(sqrt(x), DomainError);
  EXPECT_THROW(1.0 / (x + 1.0), DomainError);
}
