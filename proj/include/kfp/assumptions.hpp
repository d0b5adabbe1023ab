#pragma once

// Verification of the structural hypotheses on a momentum grid and
// extraction of the constants sigma1, sigma2, beta, gamma, omega, alpha.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/geometry.hpp"
#include "kfp/linalg.hpp"
#include "kfp/model.hpp"

namespace kfp {

enum class FormKind { A, B, C, R };

struct FormNxN {
  Mat entries;
  FormKind kind = FormKind::A;
  Vec at;
};

/// All bilinear forms at one point, computed from a single jet evaluation.
struct PointForms {
  Mat A, B, C, R;
  Mat ric;        // Ric
  Mat hess_logu;  // Hess log u
  Mat g;
  double det_g = 0.0;
  double det_dv = 0.0;
};

namespace assumptions_detail {

/// Jets of A^{IJ} = g^{ij} d_i v^I d_j v^J (row-major N x N).
inline std::vector<Jet> form_A_jets(const PointData& pd) {
  const int n = pd.geo.n();
  const auto& v = pd.fields.v;
  std::vector<std::vector<Jet>> dv(v.size());
  for (std::size_t I = 0; I < v.size(); ++I)
    for (int i = 0; i < n; ++i) dv[I].push_back(v[I].d(i));
  const int N = static_cast<int>(v.size());
  std::vector<Jet> A(static_cast<std::size_t>(N * N));
  for (int I = 0; I < N; ++I) {
    for (int J = I; J < N; ++J) {
      Jet s(0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += pd.geo.ginv(i, j) * dv[static_cast<std::size_t>(I)][static_cast<std::size_t>(i)] *
                                          dv[static_cast<std::size_t>(J)][static_cast<std::size_t>(j)];
      A[static_cast<std::size_t>(I * N + J)] = s;
      A[static_cast<std::size_t>(J * N + I)] = s;
    }
  }
  return A;
}

}  // namespace assumptions_detail

inline PointForms point_forms(const PointData& pd) {
  const int n = pd.geo.n();
  const auto& geo = pd.geo;
  const int N = static_cast<int>(pd.fields.v.size());
  PointForms out;
  out.A = values(assumptions_detail::form_A_jets(pd), N);
  out.g = values(pd.fields.g, n);
  out.det_g = geo.det().value();
  out.ric = values(geo.ricci(), n);
  out.hess_logu = values(geo.hessian(pd.log_u), n);

  std::vector<Mat> hv;      // covariant Hessians of v^I
  std::vector<Vec> divH;    // div of g^-1 Hess v^I g^-1
  Mat dv(N, n);
  for (int I = 0; I < N; ++I) {
    const Jet& vI = pd.fields.v[static_cast<std::size_t>(I)];
    for (int i = 0; i < n; ++i) dv(I, i) = vI.d1(i);
    std::vector<Jet> h = geo.hessian(vI);
    hv.push_back(values(h, n));
    std::vector<Jet> H(static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Jet s(0.0);
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) s += geo.ginv(a, c) * h[static_cast<std::size_t>(c * n + d)] * geo.ginv(d, b);
        H[static_cast<std::size_t>(a * n + b)] = s;
        H[static_cast<std::size_t>(b * n + a)] = s;
      }
    }
    divH.push_back(values(geo.divergence2(H)));
  }
  out.det_dv = dv.determinant();
  const Mat gi = out.g.inverse();
  const Vec W = gi * Vec(values(std::vector<Jet>([&] {
                  std::vector<Jet> d;
                  for (int k = 0; k < n; ++k) d.push_back(pd.log_u.d(k));
                  return d;
                }())));
  std::vector<Vec> K;
  for (int I = 0; I < N; ++I) K.push_back(hv[static_cast<std::size_t>(I)] * W);
  out.B.resize(N, N);
  out.C.resize(N, N);
  out.R.resize(N, N);
  for (int I = 0; I < N; ++I) {
    for (int J = 0; J < N; ++J) {
      out.B(I, J) = divH[static_cast<std::size_t>(I)].dot(out.g * divH[static_cast<std::size_t>(J)]);
      out.C(I, J) = (gi * hv[static_cast<std::size_t>(I)] * gi * hv[static_cast<std::size_t>(J)]).trace();
      out.R(I, J) = K[static_cast<std::size_t>(I)].dot(gi * K[static_cast<std::size_t>(J)]);
    }
  }
  return out;
}

inline PointForms point_forms(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  return point_forms(point_data(model, p, opt, 3));
}

inline FormNxN form_A(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  PointData pd = point_data(model, p, opt, 1);
  return {values(assumptions_detail::form_A_jets(pd), model.dim()), FormKind::A,
          Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()))};
}

inline FormNxN form_of(FormKind kind, const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  PointForms f = point_forms(model, p, opt);
  const Vec at = Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size()));
  switch (kind) {
    case FormKind::A:
      return {f.A, kind, at};
    case FormKind::B:
      return {f.B, kind, at};
    case FormKind::C:
      return {f.C, kind, at};
    case FormKind::R:
      return {f.R, kind, at};
  }
  return {};
}
inline FormNxN form_B(const Model& m, std::span<const double> p, const DerivOptions& o = {}) { return form_of(FormKind::B, m, p, o); }
inline FormNxN form_C(const Model& m, std::span<const double> p, const DerivOptions& o = {}) { return form_of(FormKind::C, m, p, o); }
inline FormNxN form_R(const Model& m, std::span<const double> p, const DerivOptions& o = {}) { return form_of(FormKind::R, m, p, o); }

/// Product metric G = g (+) A_IJ on 2N coordinates ordered (p, x), with A_IJ the inverse of A^{IJ}.
struct ProductGeometryResult {
  Mat G;
  Mat ricci;     // Ric^G
  Mat hess_logU; // Hess^G log U, U = u / sqrt(det A_IJ)
};

inline ProductGeometryResult product_geometry(const PointData& pd) {
  const int N = pd.geo.n();
  const int n2 = 2 * N;
  std::vector<Jet> Aup = assumptions_detail::form_A_jets(pd);
  Jet detAup;
  std::vector<Jet> Alow;
  try {
    Alow = invert_spd(Aup, N, &detAup);
  } catch (const MetricError&) {
    throw DegenerateA("A form is not positive definite");
  }
  std::vector<Jet> G(static_cast<std::size_t>(n2 * n2), Jet(0.0));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      G[static_cast<std::size_t>(i * n2 + j)] = pd.fields.gij(i, j);
      G[static_cast<std::size_t>((N + i) * n2 + N + j)] = Alow[static_cast<std::size_t>(i * N + j)];
    }
  PointGeometry geo(G, n2);
  // det A_IJ = 1 / det A^{IJ}
  const Jet logU = pd.log_u + 0.5 * log(detAup);
  ProductGeometryResult out;
  out.G = values(G, n2);
  out.ricci = values(geo.ricci(), n2);
  out.hess_logU = values(geo.hessian(logU), n2);
  return out;
}

// ---------------------------------------------------------------------------
// Scan grids

struct GridSpec {
  double radius = 10.0;
  int resolution = 41;  // points per axis of the uniform grid
  int quasi_random = 2000;
  std::uint64_t seed = 20240601;
};

struct ScanGrid {
  GridSpec spec;
  int dim = 0;
  std::vector<Vec> points;
};

/// Radical inverse of i in the given prime base.
inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

inline ScanGrid build_scan_grid(int dim, const GridSpec& spec) {
  if (dim < 1 || dim > kMaxJetDim) throw ConfigError("scan grid dimension must be between 1 and 4");
  if (!(spec.radius > 0.0)) throw ConfigError("scan radius must be positive");
  if (spec.resolution < 2 && spec.quasi_random < 1) throw ConfigError("scan grid is empty");
  ScanGrid grid;
  grid.spec = spec;
  grid.dim = dim;
  const double P = spec.radius;
  const double eps = 1e-12 * P;
  if (spec.resolution >= 2) {
    const int r = spec.resolution;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
      Vec p(dim);
      for (int k = 0; k < dim; ++k) p(k) = -P + 2.0 * P * idx[static_cast<std::size_t>(k)] / (r - 1);
      if (p.norm() <= P + eps) grid.points.push_back(p);
      int k = 0;
      while (k < dim && ++idx[static_cast<std::size_t>(k)] == r) idx[static_cast<std::size_t>(k++)] = 0;
      if (k == dim) break;
    }
  }
  static constexpr std::array<int, 4> primes = {2, 3, 5, 7};
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::array<double, 4> shift{};
  for (auto& s : shift) s = unif(rng);
  int added = 0;
  for (std::uint64_t i = 1; added < spec.quasi_random; ++i) {
    Vec p(dim);
    for (int k = 0; k < dim; ++k) {
      double x = radical_inverse(i, primes[static_cast<std::size_t>(k)]) + shift[static_cast<std::size_t>(k)];
      x -= std::floor(x);
      p(k) = -P + 2.0 * P * x;
    }
    if (p.norm() <= P) {
      grid.points.push_back(p);
      ++added;
    }
  }
  return grid;
}

/// Runs fn(i) for every i in [0, n), possibly on several threads. Results must be
/// written to per-index slots so the reduction order stays fixed.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned nt = std::max(1u, std::thread::hardware_concurrency());
  if (nt == 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  nt = std::min<unsigned>(nt, 16);
  std::vector<std::exception_ptr> errors(nt);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nt) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Reports

struct Witness {
  std::string what;
  Vec at;
  double value = 0.0;
};

struct CurvatureBounds {
  double sigma1 = std::numeric_limits<double>::infinity();
  double sigma2 = -std::numeric_limits<double>::infinity();
  Witness min_witness, max_witness;
  bool partial = false;
  std::vector<Witness> errors;
  int shifts = 0;
  bool ok() const { return sigma1 >= 0.0; }
};

struct Dominance {
  double beta = 0.0, gamma = 0.0, omega = 0.0;
  Witness beta_witness, gamma_witness, omega_witness;
  bool a_positive = true;
  std::optional<Witness> degenerate;
  bool partial = false;
  std::vector<Witness> errors;
  int shifts = 0;
};

struct HormanderResult {
  double min_abs_det_F = std::numeric_limits<double>::infinity();
  Witness witness;
  bool ok = false;
};

struct WarpedResult {
  double kappa1 = std::numeric_limits<double>::infinity();
  double kappa2_raw = -std::numeric_limits<double>::infinity();  // grid max of the scalar
  double kappa2 = 0.0;                                            // max(0, kappa2_raw)
  bool success = false;
  double alpha = 0.0;
  Witness kappa1_witness, kappa2_witness;
};

struct ProductResult {
  double alpha = std::numeric_limits<double>::infinity();
  bool success = false;
  Witness witness;
  double offdiag_max = 0.0;  // largest |Ric^G_{iJ} - Hess_{iJ}| seen
  int shifts = 0;
};

namespace assumptions_detail {
inline Witness make_witness(std::string what, const Vec& at, double v) { return {std::move(what), at, v}; }

inline bool isotropic(const Mat& A, double tol, double* scale) {
  const double s = A.trace() / static_cast<double>(A.rows());
  *scale = s;
  return max_abs_diff(A, s * Mat::Identity(A.rows(), A.cols())) <= tol * std::max(1.0, std::abs(s));
}
}  // namespace assumptions_detail

inline CurvatureBounds curvature_bounds(const Model& model, const ScanGrid& grid, const DerivOptions& opt = {}) {
  const std::size_t n = grid.points.size();
  if (n == 0) throw ConfigError("empty scan grid");
  struct Slot {
    double lo = 0, hi = 0;
    bool err = false;
    std::string msg;
    bool shifted = false;
  };
  std::vector<Slot> res(n);
  parallel_for(n, [&](std::size_t i) {
    const Vec& p = grid.points[i];
    try {
      PointData pd = point_data(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), opt, 2);
      const int M = model.dim();
      Mat rt = values(pd.geo.ricci(), M) - values(pd.geo.hessian(pd.log_u), M);
      auto ge = generalized_eigenvalues(rt, values(pd.fields.g, M));
      res[i] = {ge.values(0), ge.values(ge.values.size() - 1), false, {}, ge.shift != 0.0};
    } catch (const Error& e) {
      res[i].err = true;
      res[i].msg = e.what();
    }
  });
  CurvatureBounds cb;
  for (std::size_t i = 0; i < n; ++i) {
    if (res[i].err) {
      cb.partial = true;
      cb.errors.push_back(assumptions_detail::make_witness(res[i].msg, grid.points[i], 0.0));
      continue;
    }
    cb.shifts += res[i].shifted;
    if (res[i].lo < cb.sigma1) {
      cb.sigma1 = res[i].lo;
      cb.min_witness = assumptions_detail::make_witness("smallest eigenvalue of (Ric - Hess log u, g)", grid.points[i], res[i].lo);
    }
    if (res[i].hi > cb.sigma2) {
      cb.sigma2 = res[i].hi;
      cb.max_witness = assumptions_detail::make_witness("largest eigenvalue of (Ric - Hess log u, g)", grid.points[i], res[i].hi);
    }
  }
  return cb;
}

inline Dominance dominance_constants(const Model& model, const ScanGrid& grid, const DerivOptions& opt = {},
                                     bool throw_on_degenerate = true) {
  const std::size_t n = grid.points.size();
  struct Slot {
    double b = 0, c = 0, r = 0;
    int status = 0;  // 0 ok, 1 degenerate A, 2 other error
    std::string msg;
    int shifts = 0;
  };
  std::vector<Slot> res(n);
  parallel_for(n, [&](std::size_t i) {
    const Vec& p = grid.points[i];
    try {
      PointForms f = point_forms(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), opt);
      if (!is_positive_definite(f.A)) {
        res[i].status = 1;
        return;
      }
      auto eb = generalized_eigenvalues(f.B, f.A);
      auto ec = generalized_eigenvalues(f.C, f.A);
      auto er = generalized_eigenvalues(f.R, f.A);
      res[i].b = eb.values.maxCoeff();
      res[i].c = ec.values.maxCoeff();
      res[i].r = er.values.maxCoeff();
      res[i].shifts = (eb.shift != 0) + (ec.shift != 0) + (er.shift != 0);
    } catch (const DegenerateA&) {
      res[i].status = 1;
    } catch (const Error& e) {
      res[i].status = 2;
      res[i].msg = e.what();
    }
  });
  Dominance d;
  d.beta_witness = d.gamma_witness = d.omega_witness = assumptions_detail::make_witness("", grid.points.front(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (res[i].status == 1) {
      d.a_positive = false;
      if (!d.degenerate) d.degenerate = assumptions_detail::make_witness("A not positive definite", grid.points[i], 0.0);
      continue;
    }
    if (res[i].status == 2) {
      d.partial = true;
      d.errors.push_back(assumptions_detail::make_witness(res[i].msg, grid.points[i], 0.0));
      continue;
    }
    d.shifts += res[i].shifts;
    if (res[i].b > d.beta) {
      d.beta = res[i].b;
      d.beta_witness = assumptions_detail::make_witness("largest eigenvalue of (B, A)", grid.points[i], res[i].b);
    }
    if (res[i].c > d.gamma) {
      d.gamma = res[i].c;
      d.gamma_witness = assumptions_detail::make_witness("largest eigenvalue of (C, A)", grid.points[i], res[i].c);
    }
    if (res[i].r > d.omega) {
      d.omega = res[i].r;
      d.omega_witness = assumptions_detail::make_witness("largest eigenvalue of (R, A)", grid.points[i], res[i].r);
    }
  }
  if (!d.a_positive && throw_on_degenerate) {
    const Vec& w = d.degenerate->at;
    std::string at;
    for (Eigen::Index k = 0; k < w.size(); ++k) at += (k ? ", " : "") + std::to_string(w(k));
    throw DegenerateA("A form is not positive definite at p = (" + at + ")");
  }
  return d;
}

inline HormanderResult hormander_check(const Model& model, const ScanGrid& grid, const DerivOptions& opt = {}) {
  HormanderResult h;
  for (const Vec& p : grid.points) {
    FieldJets f = field_jets(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), 1, opt);
    const int M = model.dim();
    Mat dv(M, M);
    for (int I = 0; I < M; ++I)
      for (int i = 0; i < M; ++i) dv(I, i) = f.v[static_cast<std::size_t>(I)].d1(i);
    const double val = values(f.g, M).determinant() * std::abs(dv.determinant());
    if (val < h.min_abs_det_F) {
      h.min_abs_det_F = val;
      h.witness = assumptions_detail::make_witness("det g |det dv|", p, val);
    }
  }
  h.ok = h.min_abs_det_F > 0.0;
  return h;
}

struct GrowthResult {
  std::vector<double> radii;
  std::vector<double> ratios;  // max_ij |g^ij| / |p|^2 per radius
  bool ok = false;
};

/// Growth of the inverse metric along rays: the ratio must decrease over the
/// radii and end below a tenth of its first value.
inline GrowthResult growth_check(const Model& model, std::span<const double> radii) {
  const int M = model.dim();
  if (radii.size() < 2) throw ConfigError("growth check needs at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]) || radii[0] <= 0.0) throw ConfigError("growth radii must be positive and increasing");
  std::vector<Vec> dirs;
  for (int k = 0; k < M; ++k) {
    Vec e = Vec::Zero(M);
    e(k) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  dirs.push_back(Vec::Ones(M).normalized());
  GrowthResult out;
  for (double r : radii) {
    double worst = 0.0;
    for (const Vec& d : dirs) {
      Vec p = r * d;
      FieldJets f = field_jets(model, std::span<const double>(p.data(), static_cast<std::size_t>(M)), 0);
      Mat gi = values(f.g, M).inverse();
      worst = std::max(worst, gi.cwiseAbs().maxCoeff() / (r * r));
    }
    out.radii.push_back(r);
    out.ratios.push_back(worst);
  }
  bool mono = true;
  for (std::size_t i = 1; i < out.ratios.size(); ++i) mono = mono && out.ratios[i] < out.ratios[i - 1];
  out.ok = mono && out.ratios.back() < out.ratios.front() / 10.0;
  return out;
}

inline std::vector<double> default_growth_radii() { return {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000}; }

inline constexpr double kIsotropyTol = 1e-8;

inline WarpedResult logsob_warped(const Model& model, const ScanGrid& grid, const DerivOptions& opt = {}) {
  const int N = model.dim();
  const std::size_t n = grid.points.size();
  struct Slot {
    double k1 = 0, k2 = 0;
    bool aniso = false;
  };
  std::vector<Slot> res(n);
  std::atomic<bool> anisotropic{false};
  parallel_for(n, [&](std::size_t i) {
    if (anisotropic.load(std::memory_order_relaxed)) return;
    const Vec& p = grid.points[i];
    PointData pd = point_data(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), opt, 3);
    std::vector<Jet> A = assumptions_detail::form_A_jets(pd);
    double scale = 0.0;
    if (!assumptions_detail::isotropic(values(A, N), kIsotropyTol, &scale)) {
      res[i].aniso = true;
      anisotropic = true;
      return;
    }
    // A^{IJ} = zeta^-2 delta
    const Jet zeta = pow(A[0], -0.5);
    const Jet logz = log(zeta);
    Mat lhs = values(pd.geo.ricci(), N) - values(pd.geo.hessian(pd.log_u), N);
    Vec dz(N);
    for (int k = 0; k < N; ++k) dz(k) = zeta.d1(k);
    lhs -= (N / (zeta.value() * zeta.value())) * dz * dz.transpose();
    res[i].k1 = generalized_eigenvalues(lhs, values(pd.fields.g, N)).values(0);
    double cross = 0.0;
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) cross += pd.geo.ginv(a, b).value() * pd.log_u.d1(a) * logz.d1(b);
    res[i].k2 = pd.geo.laplacian(logz).value() + cross;
  });
  WarpedResult w;
  for (std::size_t i = 0; i < n; ++i) {
    if (res[i].aniso) throw NotIsotropic("A form is not proportional to the identity");
    if (res[i].k1 < w.kappa1) {
      w.kappa1 = res[i].k1;
      w.kappa1_witness = assumptions_detail::make_witness("kappa1", grid.points[i], res[i].k1);
    }
    if (res[i].k2 > w.kappa2_raw) {
      w.kappa2_raw = res[i].k2;
      w.kappa2_witness = assumptions_detail::make_witness("kappa2", grid.points[i], res[i].k2);
    }
  }
  w.kappa2 = std::max(0.0, w.kappa2_raw);
  w.success = w.kappa1 > w.kappa2;
  w.alpha = w.success ? w.kappa1 - w.kappa2 : 0.0;
  return w;
}

inline ProductResult logsob_product(const Model& model, const ScanGrid& grid, const DerivOptions& opt = {}) {
  const int N = model.dim();
  const std::size_t n = grid.points.size();
  struct Slot {
    double a = 0, off = 0;
    bool shifted = false;
  };
  std::vector<Slot> res(n);
  parallel_for(n, [&](std::size_t i) {
    const Vec& p = grid.points[i];
    PointData pd = point_data(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), opt, 3);
    ProductGeometryResult pg = product_geometry(pd);
    Mat lhs = pg.ricci - pg.hess_logU;
    res[i].off = lhs.block(0, N, N, N).cwiseAbs().maxCoeff();
    auto ge = generalized_eigenvalues(lhs, pg.G);
    res[i].a = ge.values(0);
    res[i].shifted = ge.shift != 0.0;
  });
  ProductResult r;
  for (std::size_t i = 0; i < n; ++i) {
    r.offdiag_max = std::max(r.offdiag_max, res[i].off);
    r.shifts += res[i].shifted;
    if (res[i].a < r.alpha) {
      r.alpha = res[i].a;
      r.witness = assumptions_detail::make_witness("smallest eigenvalue of (Ric^G - Hess^G log U, G)", grid.points[i], res[i].a);
    }
  }
  r.success = r.alpha > 0.0;
  return r;
}

/// Smallest theta in the sequence theta_start * factor^k (k = 0..steps-1) for which
/// the product-metric criterion succeeds on the grid. An estimate on the grid only.
inline std::optional<double> theta_threshold_scan(double theta_start, double factor, int steps, const ScanGrid& grid,
                                                  int dim = 3) {
  double theta = theta_start;
  for (int k = 0; k < steps; ++k, theta *= factor) {
    if (logsob_product(builtin_relativistic(theta, dim), grid).success) return theta;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

enum class AlphaSource { None, Warped, Product, Manual };

inline const char* to_string(AlphaSource s) {
  switch (s) {
    case AlphaSource::Warped:
      return "warped";
    case AlphaSource::Product:
      return "product";
    case AlphaSource::Manual:
      return "manual";
    default:
      return "none";
  }
}

struct AssumptionReport {
  std::string model_name;
  int dim = 0;
  std::optional<double> theta;
  ScanGrid grid;
  CurvatureBounds curvature;
  Dominance dominance;
  HormanderResult hormander;
  GrowthResult growth;
  std::optional<WarpedResult> warped;
  std::string warped_note;
  std::optional<ProductResult> product;
  std::string product_note;
  std::optional<double> alpha;
  AlphaSource alpha_source = AlphaSource::None;

  double sigma1() const { return curvature.sigma1; }
  double sigma2() const { return curvature.sigma2; }
  double sigma() const { return curvature.sigma2 - curvature.sigma1; }
  double beta() const { return dominance.beta; }
  double gamma() const { return dominance.gamma; }
  double omega() const { return dominance.omega; }

  bool curvature_ok() const { return curvature.ok() && !curvature.partial; }
  bool required_ok() const {
    return curvature_ok() && dominance.a_positive && !dominance.partial && hormander.ok && growth.ok;
  }
};

struct CheckOptions {
  GridSpec grid;
  DerivOptions deriv;
  std::optional<double> manual_alpha;
  bool try_log_sobolev = true;
};

inline AssumptionReport check_assumptions(const Model& model, const CheckOptions& opt = {}) {
  AssumptionReport rep;
  rep.model_name = model.name();
  rep.dim = model.dim();
  rep.theta = model.theta();
  rep.grid = build_scan_grid(model.dim(), opt.grid);
  rep.curvature = curvature_bounds(model, rep.grid, opt.deriv);
  rep.dominance = dominance_constants(model, rep.grid, opt.deriv, false);
  rep.hormander = hormander_check(model, rep.grid, opt.deriv);
  const auto radii = default_growth_radii();
  rep.growth = growth_check(model, radii);
  if (opt.try_log_sobolev && rep.dominance.a_positive) {
    try {
      rep.warped = logsob_warped(model, rep.grid, opt.deriv);
      if (rep.warped->success) {
        rep.alpha = rep.warped->alpha;
        rep.alpha_source = AlphaSource::Warped;
      } else {
        rep.warped_note = "criterion failed (kappa1 <= kappa2)";
      }
    } catch (const NotIsotropic& e) {
      rep.warped_note = std::string("not applicable: ") + e.what();
    } catch (const Error& e) {
      rep.warped_note = std::string("error: ") + e.what();
    }
    if (!rep.alpha) {
      try {
        rep.product = logsob_product(model, rep.grid, opt.deriv);
        if (rep.product->success) {
          rep.alpha = rep.product->alpha;
          rep.alpha_source = AlphaSource::Product;
        } else {
          rep.product_note = "criterion failed (smallest eigenvalue <= 0); the log-Sobolev inequality may still hold";
        }
      } catch (const Error& e) {
        rep.product_note = std::string("error: ") + e.what();
      }
    }
  }
  if (opt.manual_alpha) {
    rep.alpha = *opt.manual_alpha;
    rep.alpha_source = AlphaSource::Manual;
  }
  return rep;
}

}  // namespace kfp
