#pragma once

// Pointwise Riemannian calculus on (R^M, g).
//
// Everything is computed on Taylor jets: a metric given to order K yields
// Christoffel symbols to order K-1, curvature to order K-2, and so on. The
// derivative source is either exact (jets propagated through the model) or
// central finite differences assembled into jets, so all tensor formulas
// are shared by both paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/jet.hpp"
#include "kfp/linalg.hpp"
#include "kfp/model.hpp"

namespace kfp {

enum class DerivScheme { Analytic, FiniteDifference };

struct DerivOptions {
  DerivScheme scheme = DerivScheme::Analytic;
  double h_rel = 1e-4;               // step h = h_rel * max(1, |p|)
  double third_order_factor = 10.0;  // third derivatives use a larger step
};

inline double fd_step(std::span<const double> p, double h_rel) {
  double r = 0.0;
  for (double x : p) r += x * x;
  return h_rel * std::max(1.0, std::sqrt(r));
}

/// Jets of a vector-valued function F at p, to the given order.
/// F receives jets of the coordinates and returns jets of its components.
template <class F>
std::vector<Jet> jets_of(F&& fn, std::span<const double> p, int order, const DerivOptions& opt) {
  const int n = static_cast<int>(p.size());
  if (opt.scheme == DerivScheme::Analytic) {
    auto vars = Jet::variables(p, order);
    return fn(std::span<const Jet>(vars));
  }
  const double h1 = fd_step(p, opt.h_rel);
  const double h3 = h1 * opt.third_order_factor;
  std::map<std::pair<int, std::array<int, kMaxJetDim>>, std::vector<double>> cache;
  auto value_at = [&](int which, const std::array<int, kMaxJetDim>& off) -> const std::vector<double>& {
    auto key = std::make_pair(which, off);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double h = which == 3 ? h3 : h1;
    std::vector<Jet> q;
    for (int k = 0; k < n; ++k)
      q.push_back(Jet::constant(p[static_cast<std::size_t>(k)] + off[static_cast<std::size_t>(k)] * h, n, 0));
    std::vector<Jet> out = fn(std::span<const Jet>(q));
    std::vector<double> vals;
    vals.reserve(out.size());
    for (const Jet& j : out) vals.push_back(j.value());
    return cache.emplace(key, std::move(vals)).first->second;
  };
  // 1D central stencils: offsets and weights (in units of h^-a)
  static const std::array<std::vector<std::pair<int, double>>, 4> stencil = {{
      {{0, 1.0}},
      {{-1, -0.5}, {1, 0.5}},
      {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
      {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
  }};
  const auto idx = Jet::multi_indices(n, order);
  std::vector<std::vector<double>> partials(idx.size());
  std::size_t ncomp = 0;
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const MultiIndex& e = idx[m];
    int deg = 0;
    for (int k = 0; k < n; ++k) deg += e[static_cast<std::size_t>(k)];
    const int which = deg == 3 ? 3 : 1;
    const double h = which == 3 ? h3 : h1;
    std::vector<double> acc;
    std::array<int, kMaxJetDim> off{};
    std::function<void(int, double)> rec = [&](int k, double w) {
      if (k == n) {
        const auto& vals = value_at(which, off);
        if (acc.empty()) acc.assign(vals.size(), 0.0);
        for (std::size_t c = 0; c < vals.size(); ++c) acc[c] += w * vals[c];
        return;
      }
      for (const auto& [o, wk] : stencil[e[static_cast<std::size_t>(k)]]) {
        off[static_cast<std::size_t>(k)] = o;
        rec(k + 1, w * wk);
      }
      off[static_cast<std::size_t>(k)] = 0;
    };
    rec(0, 1.0);
    const double scale = std::pow(h, -deg);
    for (double& a : acc) a *= scale;
    ncomp = acc.size();
    partials[m] = std::move(acc);
  }
  std::vector<Jet> out;
  out.reserve(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) {
    std::size_t m = 0;
    out.push_back(Jet::from_partials(n, order, [&](const MultiIndex&) { return partials[m++][c]; }));
  }
  return out;
}

/// Model fields (g, v, E) as jets at p, via the requested derivative scheme.
inline FieldJets field_jets(const Model& model, std::span<const double> p, int order, const DerivOptions& opt = {}) {
  const int M = model.dim();
  if (static_cast<int>(p.size()) != M) throw ConfigError("point dimension does not match model");
  auto flat = jets_of(
      [&](std::span<const Jet> q) {
        FieldJets f = model.fields(q);
        std::vector<Jet> all = f.g;
        all.insert(all.end(), f.v.begin(), f.v.end());
        all.push_back(f.E);
        return all;
      },
      p, order, opt);
  FieldJets f;
  f.dim = M;
  f.g.assign(flat.begin(), flat.begin() + M * M);
  f.v.assign(flat.begin() + M * M, flat.begin() + M * M + M);
  f.E = flat.back();
  return f;
}

/// Inverse and determinant of a symmetric positive definite matrix of jets.
inline std::vector<Jet> invert_spd(std::vector<Jet> a, int n, Jet* det_out = nullptr) {
  Mat vals(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vals(i, j) = a[static_cast<std::size_t>(i * n + j)].value();
  for (double x : vals.reshaped())
    if (!std::isfinite(x)) throw MetricError("metric has non-finite entries");
  if (!is_positive_definite(vals)) throw MetricError("metric is not positive definite");
  auto at = [n](std::vector<Jet>& m, int i, int j) -> Jet& { return m[static_cast<std::size_t>(i * n + j)]; };
  std::vector<Jet> inv(static_cast<std::size_t>(n * n), Jet(0.0));
  for (int i = 0; i < n; ++i) at(inv, i, i) = Jet(1.0);
  Jet det(1.0);
  for (int c = 0; c < n; ++c) {
    const Jet piv = at(a, c, c);
    if (piv.value() <= 0.0) throw MetricError("singular metric");
    det = det * piv;
    const Jet rinv = reciprocal(piv);
    for (int j = 0; j < n; ++j) {
      at(a, c, j) = at(a, c, j) * rinv;
      at(inv, c, j) = at(inv, c, j) * rinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const Jet f = at(a, r, c);
      if (f.value() == 0.0 && f.dim() == 0) continue;
      for (int j = 0; j < n; ++j) {
        at(a, r, j) -= f * at(a, c, j);
        at(inv, r, j) -= f * at(inv, c, j);
      }
    }
  }
  if (det_out) *det_out = det;
  return inv;
}

/// Riemannian calculus at one point for a metric given as jets. The jets may
/// depend on fewer coordinates than n; the remaining coordinates are inert
/// (all derivatives along them vanish).
class PointGeometry {
 public:
  PointGeometry(std::vector<Jet> g, int n) : n_(n), g_(std::move(g)) {
    ginv_ = invert_spd(g_, n_, &det_);
    gamma_.assign(static_cast<std::size_t>(n_ * n_ * n_), Jet(0.0));
    std::vector<Jet> dg(static_cast<std::size_t>(n_ * n_ * n_));
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) dg[idx3(k, i, j)] = this->g(i, j).d(k);
    for (int k = 0; k < n_; ++k) {
      for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
          Jet s(0.0);
          bool any = false;
          for (int l = 0; l < n_; ++l) {
            Jet t = dg[idx3(i, j, l)] + dg[idx3(j, i, l)] - dg[idx3(l, i, j)];
            s += ginv(k, l) * t;
            any = true;
          }
          if (any) s *= 0.5;
          gamma_[idx3(k, i, j)] = s;
          gamma_[idx3(k, j, i)] = s;
        }
      }
    }
  }

  int n() const { return n_; }
  const Jet& g(int i, int j) const { return g_[static_cast<std::size_t>(i * n_ + j)]; }
  const Jet& ginv(int i, int j) const { return ginv_[static_cast<std::size_t>(i * n_ + j)]; }
  const Jet& det() const { return det_; }
  /// Gamma^k_ij
  const Jet& gamma(int k, int i, int j) const { return gamma_[idx3(k, i, j)]; }

  /// Gradient vector g^{ij} d_j f.
  std::vector<Jet> gradient(const Jet& f) const {
    std::vector<Jet> out;
    for (int i = 0; i < n_; ++i) {
      Jet s(0.0);
      for (int j = 0; j < n_; ++j) s += ginv(i, j) * f.d(j);
      out.push_back(s);
    }
    return out;
  }

  /// Covariant Hessian d_i d_j f - Gamma^k_ij d_k f (row-major).
  std::vector<Jet> hessian(const Jet& f) const {
    std::vector<Jet> df;
    for (int k = 0; k < n_; ++k) df.push_back(f.d(k));
    std::vector<Jet> out(static_cast<std::size_t>(n_ * n_));
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        Jet s = df[static_cast<std::size_t>(i)].d(j);
        for (int k = 0; k < n_; ++k) s -= gamma(k, i, j) * df[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i * n_ + j)] = s;
        out[static_cast<std::size_t>(j * n_ + i)] = s;
      }
    }
    return out;
  }

  /// Divergence of a vector field, (1/sqrt|g|) d_i (sqrt|g| Z^i).
  Jet divergence(std::span<const Jet> Z) const {
    const Jet sq = sqrt(det_);
    Jet s(0.0);
    for (int i = 0; i < n_; ++i) s += (sq * Z[static_cast<std::size_t>(i)]).d(i);
    return s / sq.truncated(s.order());
  }

  /// Divergence of a (2,0) tensor, contracting the covariant derivative in its
  /// second slot: d_c T^{ac} + Gamma^a_cd T^{dc} + Gamma^c_cd T^{ad}.
  std::vector<Jet> divergence2(std::span<const Jet> T) const {
    auto t = [&](int a, int b) -> const Jet& { return T[static_cast<std::size_t>(a * n_ + b)]; };
    std::vector<Jet> out;
    for (int a = 0; a < n_; ++a) {
      Jet s(0.0);
      for (int c = 0; c < n_; ++c) {
        s += t(a, c).d(c);
        for (int d = 0; d < n_; ++d) s += gamma(a, c, d) * t(d, c) + gamma(c, c, d) * t(a, d);
      }
      out.push_back(s);
    }
    return out;
  }

  /// Laplace-Beltrami operator (1/sqrt|g|) d_i (sqrt|g| g^{ij} d_j f).
  Jet laplacian(const Jet& f) const { return divergence(gradient(f)); }

  /// Ricci tensor R_ij = d_k G^k_ij - d_i G^k_kj + G^k_kl G^l_ij - G^k_il G^l_kj.
  std::vector<Jet> ricci() const {
    std::vector<Jet> out(static_cast<std::size_t>(n_ * n_));
    std::vector<Jet> trace(static_cast<std::size_t>(n_));  // G^k_kl
    for (int l = 0; l < n_; ++l) {
      Jet s(0.0);
      for (int k = 0; k < n_; ++k) s += gamma(k, k, l);
      trace[static_cast<std::size_t>(l)] = s;
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        Jet s(0.0);
        for (int k = 0; k < n_; ++k) s += gamma(k, i, j).d(k);
        s -= trace[static_cast<std::size_t>(j)].d(i);
        for (int l = 0; l < n_; ++l) {
          s += trace[static_cast<std::size_t>(l)] * gamma(l, i, j);
          for (int k = 0; k < n_; ++k) s -= gamma(k, i, l) * gamma(l, k, j);
        }
        out[static_cast<std::size_t>(i * n_ + j)] = s;
        out[static_cast<std::size_t>(j * n_ + i)] = s;
      }
    }
    return out;
  }

 private:
  std::size_t idx3(int a, int b, int c) const { return static_cast<std::size_t>((a * n_ + b) * n_ + c); }

  int n_;
  std::vector<Jet> g_, ginv_, gamma_;
  Jet det_;
};

inline Mat values(std::span<const Jet> m, int n) {
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = m[static_cast<std::size_t>(i * n + j)].value();
  return out;
}

inline Vec values(std::span<const Jet> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].value();
  return out;
}

enum class Variance { Covariant, Contravariant };

struct SymTensor2 {
  Mat entries;
  Variance variance = Variance::Covariant;
};

struct VecP {
  Vec entries;
  Variance variance = Variance::Contravariant;  // Contravariant = vector, Covariant = one-form
};

/// Pointwise metric data.
struct MetricJet {
  int dim = 0;
  Mat g, g_inv;
  double sqrt_det = 0.0;
  std::vector<double> dg;            // [k][i][j] = d_k g_ij
  std::vector<double> christoffel;   // [k][i][j] = Gamma^k_ij
  std::vector<double> dchristoffel;  // [l][k][i][j] = d_l Gamma^k_ij

  double dg_at(int k, int i, int j) const { return dg[static_cast<std::size_t>((k * dim + i) * dim + j)]; }
  double gamma(int k, int i, int j) const { return christoffel[static_cast<std::size_t>((k * dim + i) * dim + j)]; }
  double dgamma(int l, int k, int i, int j) const {
    return dchristoffel[static_cast<std::size_t>(((l * dim + k) * dim + i) * dim + j)];
  }
};

/// Everything at one momentum point: fields, metric calculus and log u = -E - log sqrt(det g).
struct PointData {
  FieldJets fields;
  PointGeometry geo;
  Jet log_u;

  PointData(FieldJets f, int n)
      : fields(std::move(f)), geo(fields.g, n), log_u(-fields.E - 0.5 * log(geo.det())) {}
};

inline PointData point_data(const Model& model, std::span<const double> p, const DerivOptions& opt = {}, int order = 3) {
  FieldJets f = field_jets(model, p, order, opt);
  return PointData(std::move(f), model.dim());
}

inline MetricJet metric_jet(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 2, opt);
  const int n = model.dim();
  PointGeometry geo(f.g, n);
  MetricJet mj;
  mj.dim = n;
  mj.g = values(f.g, n);
  std::vector<Jet> ginv;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ginv.push_back(geo.ginv(i, j));
  mj.g_inv = values(ginv, n);
  mj.sqrt_det = std::sqrt(geo.det().value());
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        mj.dg.push_back(f.gij(i, j).d1(k));
        mj.christoffel.push_back(geo.gamma(k, i, j).value());
      }
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mj.dchristoffel.push_back(geo.gamma(k, i, j).d1(l));
  return mj;
}

/// Scalar field of the momentum coordinates, evaluated on jets.
using ScalarField = std::function<Jet(std::span<const Jet>)>;
/// Vector field (M components) of the momentum coordinates.
using VectorField = std::function<std::vector<Jet>(std::span<const Jet>)>;
/// (2,0) tensor field, M*M row-major components.
using Tensor2Field = std::function<std::vector<Jet>(std::span<const Jet>)>;

namespace geometry_detail {
inline Jet scalar_jet(const ScalarField& f, std::span<const double> p, int order, const DerivOptions& opt) {
  return jets_of([&](std::span<const Jet> q) { return std::vector<Jet>{f(q)}; }, p, order, opt)[0];
}
}  // namespace geometry_detail

inline SymTensor2 ricci(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 2, opt);
  PointGeometry geo(f.g, model.dim());
  return {values(geo.ricci(), model.dim()), Variance::Covariant};
}

inline SymTensor2 covariant_hessian(const Model& model, const ScalarField& fn, std::span<const double> p,
                                    const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 2, opt);
  PointGeometry geo(f.g, model.dim());
  const Jet s = geometry_detail::scalar_jet(fn, p, 2, opt);
  return {values(geo.hessian(s), model.dim()), Variance::Covariant};
}

inline VecP gradient_p(const Model& model, const ScalarField& fn, std::span<const double> p,
                       const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 1, opt);
  PointGeometry geo(f.g, model.dim());
  const Jet s = geometry_detail::scalar_jet(fn, p, 1, opt);
  return {values(geo.gradient(s)), Variance::Contravariant};
}

inline double divergence_vec(const Model& model, const VectorField& Z, std::span<const double> p,
                             const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 1, opt);
  PointGeometry geo(f.g, model.dim());
  auto z = jets_of([&](std::span<const Jet> q) { return Z(q); }, p, 1, opt);
  return geo.divergence(z).value();
}

inline VecP divergence_tensor2(const Model& model, const Tensor2Field& T, std::span<const double> p,
                               const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 1, opt);
  PointGeometry geo(f.g, model.dim());
  auto t = jets_of([&](std::span<const Jet> q) { return T(q); }, p, 1, opt);
  return {values(geo.divergence2(t)), Variance::Contravariant};
}

inline double laplace_beltrami(const Model& model, const ScalarField& fn, std::span<const double> p,
                               const DerivOptions& opt = {}) {
  FieldJets f = field_jets(model, p, 1, opt);
  PointGeometry geo(f.g, model.dim());
  const Jet s = geometry_detail::scalar_jet(fn, p, 2, opt);
  return geo.laplacian(s).value();
}

inline double weight_u(const Model& model, std::span<const double> p) {
  FieldJets f = field_jets(model, p, 1);
  PointGeometry geo(f.g, model.dim());
  const double u = std::exp(-f.E.value()) / std::sqrt(geo.det().value());
  if (!(u > 0.0) || !std::isfinite(u)) throw NonpositiveWeight("weight u is not positive at the requested point");
  return u;
}

inline VecP drift_W(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  PointData pd = point_data(model, p, opt, 1);
  return {values(pd.geo.gradient(pd.log_u)), Variance::Contravariant};
}

/// Hessian of log u at p.
inline SymTensor2 hessian_log_u(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  PointData pd = point_data(model, p, opt, 2);
  return {values(pd.geo.hessian(pd.log_u), model.dim()), Variance::Covariant};
}

/// Bakry-Emery-Ricci tensor Ric - Hess log u.
inline SymTensor2 bakry_emery_ricci(const Model& model, std::span<const double> p, const DerivOptions& opt = {}) {
  PointData pd = point_data(model, p, opt, 2);
  const double u = std::exp(pd.log_u.value());
  if (!(u > 0.0)) throw NonpositiveWeight("weight u vanishes numerically");
  return {values(pd.geo.ricci(), model.dim()) - values(pd.geo.hessian(pd.log_u), model.dim()), Variance::Covariant};
}

}  // namespace kfp
