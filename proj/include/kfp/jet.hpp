#pragma once

// Truncated multivariate Taylor polynomials ("jets").
//
// A Jet of order K in n variables stores the coefficients c_a = (d^a f)(p) / a!
// for every multi-index |a| <= K, in graded-lexicographic order. Arithmetic is
// exact modulo truncation, so fields written once as generic code produce all
// partial derivatives up to order K at a point without finite differences.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp {

inline constexpr int kMaxJetDim = 4;
inline constexpr int kMaxJetOrder = 3;
inline constexpr int kMaxJetTerms = 35;  // C(kMaxJetDim + kMaxJetOrder, kMaxJetOrder)

using MultiIndex = std::array<std::uint8_t, kMaxJetDim>;

namespace detail {

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct JetLayout {
  int dim = 0;
  std::vector<MultiIndex> exps;
  std::vector<int> degree;
  std::array<int, kMaxJetOrder + 2> count{};  // count[K] = number of terms of order <= K
  struct Triple {
    std::uint8_t a, b, c;
  };
  std::vector<Triple> products;  // sorted by c
  // shift[k][i]: index of exps[i] + e_k and the factor (a_k + 1), for |exps[i]| < kMaxJetOrder
  std::array<std::vector<std::pair<int, double>>, kMaxJetDim> shift;

  int index_of(const MultiIndex& e) const {
    for (std::size_t i = 0; i < exps.size(); ++i)
      if (exps[i] == e) return static_cast<int>(i);
    return -1;
  }

  explicit JetLayout(int n) : dim(n) {
    for (int deg = 0; deg <= kMaxJetOrder; ++deg) {
      // lexicographic enumeration of exponents with total degree deg
      MultiIndex e{};
      auto rec = [&](auto&& self, int var, int left) -> void {
        if (var == n - 1 || n == 0) {
          if (n > 0) e[var] = static_cast<std::uint8_t>(left);
          if (n == 0 && left != 0) return;
          exps.push_back(e);
          degree.push_back(deg);
          if (n > 0) e[var] = 0;
          return;
        }
        for (int a = left; a >= 0; --a) {
          e[var] = static_cast<std::uint8_t>(a);
          self(self, var + 1, left - a);
        }
        e[var] = 0;
      };
      rec(rec, 0, deg);
      count[deg] = static_cast<int>(exps.size());
    }
    count[kMaxJetOrder + 1] = count[kMaxJetOrder];
    const int nt = static_cast<int>(exps.size());
    for (int c = 0; c < nt; ++c) {
      for (int a = 0; a < nt; ++a) {
        MultiIndex rest{};
        bool ok = true;
        for (int v = 0; v < kMaxJetDim; ++v) {
          if (exps[a][v] > exps[c][v]) {
            ok = false;
            break;
          }
          rest[v] = static_cast<std::uint8_t>(exps[c][v] - exps[a][v]);
        }
        if (!ok) continue;
        const int b = index_of(rest);
        products.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                            static_cast<std::uint8_t>(c)});
      }
    }
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < nt; ++i) {
        if (degree[i] == kMaxJetOrder) {
          shift[k].push_back({-1, 0.0});
          continue;
        }
        MultiIndex up = exps[i];
        up[k] = static_cast<std::uint8_t>(up[k] + 1);
        shift[k].push_back({index_of(up), static_cast<double>(up[k])});
      }
    }
  }
};

inline const JetLayout& layout(int dim) {
  static const std::array<JetLayout, kMaxJetDim + 1> layouts = {JetLayout(0), JetLayout(1), JetLayout(2),
                                                                JetLayout(3), JetLayout(4)};
  assert(dim >= 0 && dim <= kMaxJetDim);
  return layouts[static_cast<std::size_t>(dim)];
}

}  // namespace detail

/// Number of Taylor coefficients of a jet of the given order in `dim` variables.
constexpr int jet_terms(int dim, int order) { return detail::binomial(dim + order, order); }

class Jet {
 public:
  Jet() = default;
  Jet(double value) : order_(kMaxJetOrder) { c_[0] = value; }  // NOLINT: scalars promote

  static Jet constant(double value, int dim, int order) {
    Jet j;
    j.dim_ = dim;
    j.order_ = order;
    j.c_[0] = value;
    return j;
  }

  /// The coordinate function p^k expanded at p^k = value.
  static Jet variable(int k, double value, int dim, int order) {
    check_shape(dim, order);
    Jet j = constant(value, dim, order);
    if (order >= 1) j.c_[static_cast<std::size_t>(1 + k)] = 1.0;
    return j;
  }

  /// Independent variables at point p (one jet per coordinate).
  static std::vector<Jet> variables(std::span<const double> p, int order) {
    const int n = static_cast<int>(p.size());
    std::vector<Jet> out;
    out.reserve(p.size());
    for (int k = 0; k < n; ++k) out.push_back(variable(k, p[static_cast<std::size_t>(k)], n, order));
    return out;
  }

  /// Jet whose coefficients come from supplied partial derivatives d^a f(p).
  template <class PartialFn>
  static Jet from_partials(int dim, int order, PartialFn&& partial) {
    check_shape(dim, order);
    Jet j = constant(0.0, dim, order);
    const auto& L = detail::layout(dim);
    for (int i = 0; i < L.count[static_cast<std::size_t>(order)]; ++i) {
      const MultiIndex& e = L.exps[static_cast<std::size_t>(i)];
      double fact = 1.0;
      for (int v = 0; v < dim; ++v)
        for (int m = 2; m <= e[v]; ++m) fact *= m;
      j.c_[static_cast<std::size_t>(i)] = partial(e) / fact;
    }
    return j;
  }

  /// Multi-indices of all coefficients up to the given order, in storage order.
  static std::span<const MultiIndex> multi_indices(int dim, int order) {
    const auto& L = detail::layout(dim);
    return {L.exps.data(), static_cast<std::size_t>(L.count[static_cast<std::size_t>(order)])};
  }

  int dim() const { return dim_; }
  int order() const { return order_; }
  int terms() const { return detail::layout(dim_).count[static_cast<std::size_t>(order_)]; }
  double value() const { return c_[0]; }
  double coeff(int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& coeff(int i) { return c_[static_cast<std::size_t>(i)]; }

  /// First partial derivative d_k at the expansion point.
  double d1(int k) const { return order_ >= 1 && k < dim_ ? c_[static_cast<std::size_t>(1 + k)] : 0.0; }

  /// Partial derivative of the given multi-index at the expansion point.
  double partial(const MultiIndex& e) const {
    int deg = 0;
    double fact = 1.0;
    for (int v = 0; v < kMaxJetDim; ++v) {
      if (v >= dim_ && e[v] != 0) return 0.0;
      deg += e[v];
      for (int m = 2; m <= e[v]; ++m) fact *= m;
    }
    if (deg > order_) throw std::out_of_range("Jet::partial: order exceeds truncation");
    const int i = detail::layout(dim_).index_of(e);
    return c_[static_cast<std::size_t>(i)] * fact;
  }

  double d2(int k, int l) const {
    MultiIndex e{};
    ++e[k];
    ++e[l];
    return partial(e);
  }

  double d3(int k, int l, int m) const {
    MultiIndex e{};
    ++e[k];
    ++e[l];
    ++e[m];
    return partial(e);
  }

  /// Partial derivative d/dp^k as a jet of one order less. Coordinates k >= dim()
  /// are treated as present but inert (the field does not depend on them).
  Jet d(int k) const {
    Jet r;
    r.dim_ = dim_;
    r.order_ = order_ - 1;
    if (r.order_ < 0) throw std::logic_error("Jet::d: differentiating an order-0 jet");
    if (k >= dim_) return r;
    const auto& L = detail::layout(dim_);
    const int n = L.count[static_cast<std::size_t>(r.order_)];
    const auto& sh = L.shift[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      const auto& [idx, f] = sh[static_cast<std::size_t>(i)];
      r.c_[static_cast<std::size_t>(i)] = f * c_[static_cast<std::size_t>(idx)];
    }
    return r;
  }

  Jet truncated(int order) const {
    Jet r = *this;
    if (order >= order_) return r;
    r.order_ = order;
    const auto& L = detail::layout(dim_);
    for (int i = L.count[static_cast<std::size_t>(order)]; i < kMaxJetTerms; ++i) r.c_[static_cast<std::size_t>(i)] = 0.0;
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    merge_shape(o);
    for (int i = 0, n = terms(); i < n; ++i) c_[static_cast<std::size_t>(i)] += o.c_[static_cast<std::size_t>(i)];
    clear_tail();
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    merge_shape(o);
    for (int i = 0, n = terms(); i < n; ++i) c_[static_cast<std::size_t>(i)] -= o.c_[static_cast<std::size_t>(i)];
    clear_tail();
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Jet& operator/=(double s) { return *this *= (1.0 / s); }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.dim_ = a.dim_ > b.dim_ ? a.dim_ : b.dim_;
    r.order_ = a.order_ < b.order_ ? a.order_ : b.order_;
    if (a.dim_ == 0 || b.dim_ == 0 || r.order_ == 0) {
      // one factor is a pure constant
      const Jet& s = a.dim_ == 0 ? a : b;
      const Jet& f = a.dim_ == 0 ? b : a;
      const double k = s.c_[0];
      const int n = detail::layout(r.dim_).count[static_cast<std::size_t>(r.order_)];
      if (r.order_ == 0) {
        r.c_[0] = a.c_[0] * b.c_[0];
        return r;
      }
      for (int i = 0; i < n; ++i) r.c_[static_cast<std::size_t>(i)] = k * f.c_[static_cast<std::size_t>(i)];
      return r;
    }
    const auto& L = detail::layout(r.dim_);
    const int n = L.count[static_cast<std::size_t>(r.order_)];
    for (const auto& t : L.products) {
      if (t.c >= n) break;
      r.c_[t.c] += a.c_[t.a] * b.c_[t.b];
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a) { return reciprocal(a) *= s; }

  /// phi(f) from the derivatives phi^(m)(f0), m = 0..order.
  friend Jet compose(const Jet& f, std::span<const double> phi_derivs) {
    Jet delta = f;
    delta.c_[0] = 0.0;
    const int K = f.order_;
    double fact = 1.0;
    std::array<double, kMaxJetOrder + 1> a{};
    for (int m = 0; m <= K && m <= kMaxJetOrder; ++m) {
      if (m > 0) fact *= m;
      a[static_cast<std::size_t>(m)] = phi_derivs[static_cast<std::size_t>(m)] / fact;
    }
    const int top = K < kMaxJetOrder ? K : kMaxJetOrder;
    Jet r = Jet::constant(a[static_cast<std::size_t>(top)], f.dim_, f.order_);
    for (int m = top - 1; m >= 0; --m) {
      r = r * delta;
      r.c_[0] += a[static_cast<std::size_t>(m)];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& f) {
    const double x = f.c_[0];
    if (x == 0.0) throw DomainError("division by zero");
    std::array<double, kMaxJetOrder + 1> d{};
    double xm = 1.0 / x;
    double sgn = 1.0;
    double fact = 1.0;
    for (int m = 0; m <= kMaxJetOrder; ++m) {
      if (m > 0) fact *= m;
      d[static_cast<std::size_t>(m)] = sgn * fact * xm;
      xm /= x;
      sgn = -sgn;
    }
    return compose(f, d);
  }

  friend Jet pow(const Jet& f, double alpha) {
    const double x = f.c_[0];
    if (x <= 0.0 && alpha != std::floor(alpha)) throw DomainError("non-integer power of a non-positive value");
    if (x == 0.0 && alpha < kMaxJetOrder && alpha != std::floor(alpha))
      throw DomainError("power not differentiable at zero");
    std::array<double, kMaxJetOrder + 1> d{};
    double coef = 1.0;
    for (int m = 0; m <= kMaxJetOrder; ++m) {
      d[static_cast<std::size_t>(m)] = coef * (coef == 0.0 ? 0.0 : std::pow(x, alpha - m));
      coef *= (alpha - m);
    }
    return compose(f, d);
  }

  friend Jet sqrt(const Jet& f) {
    if (f.c_[0] <= 0.0) throw DomainError("sqrt of a non-positive value");
    return pow(f, 0.5);
  }

  friend Jet sin(const Jet& f) {
    const double s = std::sin(f.c_[0]), c = std::cos(f.c_[0]);
    const std::array<double, kMaxJetOrder + 1> d{s, c, -s, -c};
    return compose(f, d);
  }

  friend Jet cos(const Jet& f) {
    const double s = std::sin(f.c_[0]), c = std::cos(f.c_[0]);
    const std::array<double, kMaxJetOrder + 1> d{c, -s, -c, s};
    return compose(f, d);
  }

  friend Jet exp(const Jet& f) {
    const double e = std::exp(f.c_[0]);
    const std::array<double, kMaxJetOrder + 1> d{e, e, e, e};
    return compose(f, d);
  }

  friend Jet log(const Jet& f) {
    const double x = f.c_[0];
    if (x <= 0.0) throw DomainError("log of a non-positive value");
    const std::array<double, kMaxJetOrder + 1> d{std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)};
    return compose(f, d);
  }

 private:
  static void check_shape(int dim, int order) {
    if (dim < 0 || dim > kMaxJetDim || order < 0 || order > kMaxJetOrder)
      throw std::invalid_argument("Jet: dimension or order out of range");
  }

  void merge_shape(const Jet& o) {
    if (o.dim_ > dim_) dim_ = o.dim_;
    if (o.order_ < order_) order_ = o.order_;
  }

  void clear_tail() {
    for (int i = terms(); i < kMaxJetTerms; ++i) c_[static_cast<std::size_t>(i)] = 0.0;
  }

  int dim_ = 0;
  int order_ = kMaxJetOrder;
  std::array<double, kMaxJetTerms> c_{};
};

}  // namespace kfp
