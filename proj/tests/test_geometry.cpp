#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kfp/assumptions.hpp"
#include "kfp/geometry.hpp"
#include "kfp/model.hpp"
#include "kfp/relativistic_closed_forms.hpp"

using namespace kfp;

namespace {

Model metric_model(std::string name, int n, std::function<Jet(std::span<const Jet>)> conformal) {
  // g = phi(p) delta, v = p, E = |p|^2 / 2
  return Model(std::move(name), n, ModelKind::User, std::nullopt, [n, conformal](std::span<const Jet> p) {
    FieldJets f;
    f.dim = n;
    const Jet phi = conformal(p);
    f.g.assign(static_cast<std::size_t>(n * n), Jet(0.0));
    for (int i = 0; i < n; ++i) f.g[static_cast<std::size_t>(i * n + i)] = phi;
    Jet e(0.0);
    for (const Jet& q : p) {
      f.v.push_back(q);
      e += 0.5 * q * q;
    }
    f.E = e;
    return f;
  });
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::span<const double> sp(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST(Geometry, FlatMetricHasNoCurvature) {
  const Model m = builtin_classical(3);
  const Vec p = vec({0.3, -1.2, 2.0});
  EXPECT_LT(ricci(m, sp(p)).entries.cwiseAbs().maxCoeff(), 1e-15);
  const MetricJet mj = metric_jet(m, sp(p));
  for (double c : mj.christoffel) EXPECT_EQ(c, 0.0);
}

TEST(Geometry, RoundSphereHasRicciEqualToMetric) {
  // stereographic chart of the unit sphere: g = 4 / (1 + |p|^2)^2 delta, Ric = (n - 1) g
  for (int n : {2, 3}) {
    const Model m = metric_model("sphere", n, [](std::span<const Jet> p) {
      Jet r = Jet::constant(1.0, static_cast<int>(p.size()), p[0].order());
      for (const Jet& q : p) r += q * q;
      return 4.0 / (r * r);
    });
    const Vec p = n == 2 ? vec({0.4, -0.3}) : vec({0.4, -0.3, 0.9});
    const Mat ric = ricci(m, sp(p)).entries;
    const Mat g = metric_jet(m, sp(p)).g;
    EXPECT_LT(max_abs_diff(ric, (n - 1) * g), 1e-12) << "n = " << n;
  }
}

TEST(Geometry, HyperbolicPlaneHasRicciMinusMetric) {
  // upper half plane in the second coordinate shifted to stay positive
  const Model m = metric_model("hyperbolic", 2, [](std::span<const Jet> p) {
    const Jet y = p[1] + 3.0;
    return 1.0 / (y * y);
  });
  const Vec p = vec({0.7, 0.5});
  EXPECT_LT(max_abs_diff(ricci(m, sp(p)).entries, -metric_jet(m, sp(p)).g), 1e-12);
}

TEST(Geometry, FlatCalculus) {
  const Model m = builtin_classical(3);
  const Vec p = vec({1.0, 2.0, -0.5});
  const ScalarField f = [](std::span<const Jet> q) { return q[0] * q[0] * q[1] + sin(q[2]); };
  const Mat H = covariant_hessian(m, f, sp(p)).entries;
  Mat expect = Mat::Zero(3, 3);
  expect(0, 0) = 2 * 2.0;
  expect(0, 1) = expect(1, 0) = 2 * 1.0;
  expect(2, 2) = -std::sin(-0.5);
  EXPECT_LT(max_abs_diff(H, expect), 1e-14);
  EXPECT_NEAR(laplace_beltrami(m, f, sp(p)), 2 * 2.0 - std::sin(-0.5), 1e-14);
  const VectorField Z = [](std::span<const Jet> q) { return std::vector<Jet>{q[0] * q[1], q[1] * q[1], q[2]}; };
  EXPECT_NEAR(divergence_vec(m, Z, sp(p)), 2.0 + 2 * 2.0 + 1.0, 1e-14);
}

TEST(Geometry, LaplacianIsDivergenceOfGradientOnCurvedMetric) {
  const Model m = builtin_relativistic(2.0, 3);
  const double p[3] = {0.5, -0.2, 0.8};
  std::vector<Jet> q;
  for (int k = 0; k < 3; ++k) q.push_back(Jet::variable(k, p[k], 3, 3));
  const FieldJets fj = m.fields(q);
  PointGeometry geo(fj.g, 3);
  const Jet f = exp(q[0]) * q[1] + q[2] * q[2];
  EXPECT_NEAR(geo.laplacian(f).value(), geo.divergence(geo.gradient(f)).value(), 1e-12);
  const ScalarField fn = [](std::span<const Jet> x) { return exp(x[0]) * x[1] + x[2] * x[2]; };
  EXPECT_NEAR(laplace_beltrami(m, fn, p), geo.laplacian(f).value(), 1e-12);
}

TEST(Geometry, FiniteDifferencePathAgreesWithAnalytic) {
  const Model m = builtin_relativistic(4.0, 3);
  DerivOptions fd;
  fd.scheme = DerivScheme::FiniteDifference;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int n = 0; n < 10; ++n) {
    const Vec p = vec({u(rng), u(rng), u(rng)});
    EXPECT_LT(max_rel_diff(ricci(m, sp(p), fd).entries, ricci(m, sp(p)).entries), 1e-6);
    EXPECT_LT(max_rel_diff(bakry_emery_ricci(m, sp(p), fd).entries, bakry_emery_ricci(m, sp(p)).entries), 1e-6);
  }
}

TEST(Relativistic, EngineMatchesClosedForms) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.7, 1.7);
  for (double theta : {1.0, 4.0}) {
    const Model m = builtin_relativistic(theta, 3);
    for (int n = 0; n < 10; ++n) {
      const Vec p = vec({u(rng), u(rng), u(rng)});
      const PointForms f = point_forms(m, sp(p));
      EXPECT_LT(max_rel_diff(f.A, relativistic::form_A(p)), 1e-12);
      EXPECT_LT(max_rel_diff(f.C, relativistic::form_C(p)), 1e-12);
      EXPECT_LT(max_rel_diff(f.R, relativistic::form_R(p, theta)), 1e-11);
      EXPECT_LT(max_rel_diff(f.ric, relativistic::ricci(p)), 1e-12);
      EXPECT_LT(max_rel_diff(f.hess_logu, relativistic::hessian_log_u(p, theta)), 1e-12);
      EXPECT_NEAR(weight_u(m, sp(p)), relativistic::weight_u(p, theta), 1e-14);
      EXPECT_LT(max_rel_diff(bakry_emery_ricci(m, sp(p)).entries, relativistic::bakry_emery_ricci(p, theta)), 1e-12);
    }
  }
}

TEST(Relativistic, BFormAgainstIndependentDerivation) {
  // c1 I + c2 A with c1 = -21 (9 p0^2 + 35) / (16 p0^9), c2 = (225 p0^4 + 399 p0^2 + 784) / (16 p0^6)
  const Model m = builtin_relativistic(4.0, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int n = 0; n < 10; ++n) {
    const Vec p = vec({u(rng), u(rng), u(rng)});
    const double p0 = relativistic::p0_of(p), q2 = p0 * p0;
    const Mat expect = -21 * (9 * q2 + 35) / (16 * std::pow(p0, 9)) * Mat::Identity(3, 3) +
                       (225 * q2 * q2 + 399 * q2 + 784) / (16 * std::pow(p0, 6)) * relativistic::form_A(p);
    EXPECT_LT(max_rel_diff(point_forms(m, sp(p)).B, expect), 1e-11);
  }
  // along a coordinate axis B_11 = (3 p0^2 - 14)^2 / (4 p0^11)
  const Vec p = vec({1.3, 0.0, 0.0});
  const double p0 = relativistic::p0_of(p);
  EXPECT_NEAR(point_forms(m, sp(p)).B(0, 0), std::pow(3 * p0 * p0 - 14, 2) / (4 * std::pow(p0, 11)), 1e-13);
  EXPECT_NEAR(point_forms(m, sp(vec({0, 0, 0}))).B(1, 1), 30.25, 1e-12);
}

TEST(Relativistic, ProductRicciMatchesClosedForm) {
  const Model m = builtin_relativistic(4.0, 3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int n = 0; n < 5; ++n) {
    const Vec p = vec({u(rng), u(rng), u(rng)});
    const PointData pd = point_data(m, sp(p), {}, 3);
    const auto pg = product_geometry(pd);
    EXPECT_LT(max_rel_diff(pg.ricci, relativistic::ricci_product(p)), 1e-10);
  }
}

TEST(Relativistic, HessianLogUVanishesOnTorusBlockAtOrigin) {
  // grad log U = 0 at p = 0, so the x-block of Hess^G log U is zero there
  const Model m = builtin_relativistic(4.0, 3);
  const Vec p = vec({0, 0, 0});
  const auto pg = product_geometry(point_data(m, sp(p), {}, 3));
  EXPECT_LT(pg.hess_logU.block(3, 3, 3, 3).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Geometry, NonPositiveMetricIsRejected) {
  const Model m = metric_model("bad", 2, [](std::span<const Jet> p) { return p[0]; });
  const Vec p = vec({-1.0, 0.0});
  EXPECT_THROW(ricci(m, sp(p)), MetricError);
}
