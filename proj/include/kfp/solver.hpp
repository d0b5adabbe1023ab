#pragma once

// 1D x 1D phase-space solver for  d_t h + v(p) d_x h = L h,  L h = Lap_p h + g(grad log u, grad h),
// on the periodic unit interval in x times [-P, P] in p with zero flux at p = +-P.
//
// Storage is x-major: h[i * Np + j] is the value on x-cell i, p-cell j.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kfp/certificate.hpp"
#include "kfp/errors.hpp"
#include "kfp/geometry.hpp"
#include "kfp/model.hpp"

namespace kfp {

struct PhaseGrid {
  int Nx = 0, Np = 0;
  double P = 0.0;
  double dx = 0.0, dp = 0.0;
  std::vector<double> x_nodes, p_nodes;
  std::vector<double> mu_weights;  // normalized, sum 1
  double tail_mass = 0.0;          // estimated equilibrium mass outside [-P, P]
  // node coefficients
  std::vector<double> v, dv, ginv;  // v(p), d_p v, g^{pp}
  std::vector<double> energy;
  // (Np + 1) half-node conductances, zero at both ends
  std::vector<double> kappa;

  std::size_t size() const { return static_cast<std::size_t>(Nx) * static_cast<std::size_t>(Np); }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * Np + j; }
};

namespace solver_detail {

inline void require_1d(const Model& model) {
  if (model.dim() != 1) throw ConfigError("the phase-space solver handles M = N = 1 models only");
}

struct NodeFields {
  double g, v, dv, E;
};

inline NodeFields node_fields(const Model& model, double p) {
  const double q[1] = {p};
  FieldJets f = model.fields(std::span<const double>(q, 1), 1);
  return {f.g[0].value(), f.v[0].value(), f.v[0].d1(0), f.E.value()};
}

// Trapezoid estimate of the integral of exp(-(E - e0)) over [a, b].
inline double tail_integral(const Model& model, double a, double b, double e0) {
  const int n = 4000;
  const double h = (b - a) / n;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    s += w * std::exp(-(node_fields(model, a + k * h).E - e0));
  }
  return s * h;
}

}  // namespace solver_detail

/// Cell-centred grid with the equilibrium measure mu = u sqrt|g| dp = exp(-E) dp, normalized.
inline PhaseGrid build_grid(const Model& model, int Nx, int Np, double P) {
  solver_detail::require_1d(model);
  if (Nx < 8 || Np < 8) throw ConfigError("grid needs Nx, Np >= 8");
  if (!(P > 0.0) || !std::isfinite(P)) throw ConfigError("truncation radius P must be positive");
  PhaseGrid G;
  G.Nx = Nx;
  G.Np = Np;
  G.P = P;
  G.dx = 1.0 / Nx;
  G.dp = 2.0 * P / Np;
  for (int i = 0; i < Nx; ++i) G.x_nodes.push_back((i + 0.5) * G.dx);
  for (int j = 0; j < Np; ++j) G.p_nodes.push_back(-P + (j + 0.5) * G.dp);

  std::vector<solver_detail::NodeFields> node, half;
  for (double p : G.p_nodes) node.push_back(solver_detail::node_fields(model, p));
  for (int j = 1; j < Np; ++j) half.push_back(solver_detail::node_fields(model, -P + j * G.dp));

  double e0 = std::numeric_limits<double>::infinity();
  for (const auto& f : node) e0 = std::min(e0, f.E);
  for (const auto& f : half) e0 = std::min(e0, f.E);
  if (!std::isfinite(e0)) throw NonpositiveWeight("energy is not finite on the grid");

  double Z = 0.0;
  for (const auto& f : node) {
    if (!(f.g > 0.0) || !std::isfinite(f.g)) throw MetricError("metric is not positive on the grid");
    const double rho = std::exp(-(f.E - e0));
    if (!(rho > 0.0) || !std::isfinite(rho)) throw NonpositiveWeight("u sqrt|g| is not positive at a grid node");
    G.mu_weights.push_back(rho * G.dp);
    Z += rho * G.dp;
    G.v.push_back(f.v);
    G.dv.push_back(f.dv);
    G.ginv.push_back(1.0 / f.g);
    G.energy.push_back(f.E);
  }
  for (double& m : G.mu_weights) m /= Z;

  G.kappa.assign(static_cast<std::size_t>(Np + 1), 0.0);
  for (int j = 1; j < Np; ++j) {
    const auto& f = half[static_cast<std::size_t>(j - 1)];
    if (!(f.g > 0.0) || !std::isfinite(f.g)) throw MetricError("metric is not positive on the grid");
    const double rho = std::exp(-(f.E - e0));
    if (!(rho > 0.0)) throw NonpositiveWeight("u sqrt|g| is not positive at a half node");
    G.kappa[static_cast<std::size_t>(j)] = rho / f.g / (G.dp * Z);
  }

  const double L = std::max(P, 10.0);
  const double tails =
      solver_detail::tail_integral(model, P, P + L, e0) + solver_detail::tail_integral(model, -P - L, -P, e0);
  G.tail_mass = tails / (Z + tails);
  return G;
}

/// Tridiagonal, self-adjoint in l2(mu): <f, L h>_mu = sum_j kappa_{j+1/2} (f_{j+1} - f_j)(h_{j+1} - h_j) * (-1).
struct DiffusionOperator {
  std::vector<double> m;      // mu weights
  std::vector<double> kappa;  // Np + 1 conductances, zero at the ends

  int size() const { return static_cast<int>(m.size()); }

  void apply(std::span<const double> h, std::span<double> out) const {
    const int n = size();
    for (int j = 0; j < n; ++j) {
      const std::size_t J = static_cast<std::size_t>(j);
      double flux = 0.0;
      if (j + 1 < n) flux += kappa[J + 1] * (h[J + 1] - h[J]);
      if (j > 0) flux -= kappa[J] * (h[J] - h[J - 1]);
      out[J] = flux / m[J];
    }
  }

  /// Backward Euler: (M + dt K) h_new = M h_old, Thomas algorithm in place.
  void solve_implicit(std::span<double> h, double dt, std::vector<double>& cprime, std::vector<double>& dprime) const {
    const int n = size();
    cprime.resize(static_cast<std::size_t>(n));
    dprime.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const std::size_t J = static_cast<std::size_t>(j);
      const double lo = dt * kappa[J];
      const double up = dt * kappa[J + 1];
      const double diag = m[J] + lo + up;
      const double rhs = m[J] * h[J];
      double denom = diag;
      double num = rhs;
      if (j > 0) {
        denom -= -lo * cprime[J - 1];
        num -= -lo * dprime[J - 1];
      }
      if (!(denom > 0.0) || !std::isfinite(denom)) throw LinearSolveFailure("diffusion solve: nonpositive pivot");
      cprime[J] = -up / denom;
      dprime[J] = num / denom;
    }
    h[static_cast<std::size_t>(n - 1)] = dprime[static_cast<std::size_t>(n - 1)];
    for (int j = n - 2; j >= 0; --j) {
      const std::size_t J = static_cast<std::size_t>(j);
      h[J] = dprime[J] - cprime[J] * h[J + 1];
    }
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(h[static_cast<std::size_t>(j)])) throw LinearSolveFailure("diffusion solve produced non-finite values");
  }
};

inline DiffusionOperator diffusion_matrix(const PhaseGrid& grid) { return {grid.mu_weights, grid.kappa}; }

inline DiffusionOperator diffusion_matrix(const Model& model, const PhaseGrid& grid) {
  solver_detail::require_1d(model);
  return diffusion_matrix(grid);
}

struct State {
  std::vector<double> h;
  double t = 0.0;
};

struct StepOptions {
  bool muscl = false;  // second-order limited reconstruction in x
  bool transport = true;
  bool diffusion = true;
};

/// Strang splitting: half transport, implicit diffusion, half transport.
class Stepper {
 public:
  Stepper(const PhaseGrid& grid, StepOptions opt = {}) : grid_(grid), opt_(opt), L_(diffusion_matrix(grid)) {
    for (double v : grid.v) vmax_ = std::max(vmax_, std::abs(v));
  }

  double max_speed() const { return vmax_; }
  double max_stable_dt() const { return vmax_ > 0.0 ? grid_.dx / vmax_ : std::numeric_limits<double>::infinity(); }

  void step(State& s, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
    if (s.h.size() != grid_.size()) throw ConfigError("state does not match the grid");
    if (opt_.transport && dt * vmax_ > grid_.dx * (1.0 + 1e-12))
      throw CFLViolation("dt * max|v| exceeds dx (dt = " + std::to_string(dt) + ", limit " +
                         std::to_string(max_stable_dt()) + ")");
    if (opt_.transport) transport(s.h, 0.5 * dt);
    if (opt_.diffusion) diffuse(s.h, dt);
    if (opt_.transport) transport(s.h, 0.5 * dt);
    s.t += dt;
  }

 private:
  static double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
  }

  void transport(std::vector<double>& h, double tau) {
    const int Nx = grid_.Nx, Np = grid_.Np;
    row_.resize(static_cast<std::size_t>(Nx));
    flux_.resize(static_cast<std::size_t>(Nx));
    const double r = tau / grid_.dx;
    for (int j = 0; j < Np; ++j) {
      const double v = grid_.v[static_cast<std::size_t>(j)];
      if (v == 0.0) continue;
      for (int i = 0; i < Nx; ++i) row_[static_cast<std::size_t>(i)] = h[grid_.idx(i, j)];
      const double nu = std::abs(v) * r;
      auto at = [&](int i) { return row_[static_cast<std::size_t>(((i % Nx) + Nx) % Nx)]; };
      // flux_[i] lives on the face between cells i and i + 1
      for (int i = 0; i < Nx; ++i) {
        double face;
        if (v > 0.0) {
          face = at(i);
          if (opt_.muscl) face += 0.5 * (1.0 - nu) * minmod(at(i + 1) - at(i), at(i) - at(i - 1));
        } else {
          face = at(i + 1);
          if (opt_.muscl) face -= 0.5 * (1.0 - nu) * minmod(at(i + 2) - at(i + 1), at(i + 1) - at(i));
        }
        flux_[static_cast<std::size_t>(i)] = v * face;
      }
      for (int i = 0; i < Nx; ++i) {
        const double left = flux_[static_cast<std::size_t>((i + Nx - 1) % Nx)];
        h[grid_.idx(i, j)] = row_[static_cast<std::size_t>(i)] - r * (flux_[static_cast<std::size_t>(i)] - left);
      }
    }
  }

  void diffuse(std::vector<double>& h, double dt) {
    const int Np = grid_.Np;
    for (int i = 0; i < grid_.Nx; ++i)
      L_.solve_implicit(std::span<double>(h.data() + grid_.idx(i, 0), static_cast<std::size_t>(Np)), dt, cp_, dp_);
  }

  const PhaseGrid& grid_;
  StepOptions opt_;
  DiffusionOperator L_;
  double vmax_ = 0.0;
  std::vector<double> row_, flux_, cp_, dp_;
};

inline State step(const State& s, double dt, const Model& model, const PhaseGrid& grid, StepOptions opt = {}) {
  solver_detail::require_1d(model);
  State out = s;
  Stepper(grid, opt).step(out, dt);
  return out;
}

/// Sample a function of (x, p) on the grid; normalized to unit mass unless normalize is false.
inline State sample_state(const PhaseGrid& grid, const std::function<double(double, double)>& fn, bool normalize = true) {
  State s;
  s.h.resize(grid.size());
  for (int i = 0; i < grid.Nx; ++i)
    for (int j = 0; j < grid.Np; ++j) {
      const double val = fn(grid.x_nodes[static_cast<std::size_t>(i)], grid.p_nodes[static_cast<std::size_t>(j)]);
      if (!(val >= 0.0) || !std::isfinite(val)) throw DomainError("initial datum must be finite and nonnegative");
      s.h[grid.idx(i, j)] = val;
    }
  if (normalize) {
    double mass = 0.0;
    for (int i = 0; i < grid.Nx; ++i)
      for (int j = 0; j < grid.Np; ++j) mass += s.h[grid.idx(i, j)] * grid.dx * grid.mu_weights[static_cast<std::size_t>(j)];
    if (!(mass > 0.0)) throw DomainError("initial datum has zero mass");
    for (double& x : s.h) x /= mass;
  }
  return s;
}

inline double mass(const State& s, const PhaseGrid& grid) {
  double m = 0.0;
  for (int i = 0; i < grid.Nx; ++i)
    for (int j = 0; j < grid.Np; ++j) m += s.h[grid.idx(i, j)] * grid.mu_weights[static_cast<std::size_t>(j)];
  return m * grid.dx;
}

/// L1(dx dmu) distance between two states.
inline double l1_distance(const State& a, const State& b, const PhaseGrid& grid) {
  double d = 0.0;
  for (int i = 0; i < grid.Nx; ++i)
    for (int j = 0; j < grid.Np; ++j)
      d += std::abs(a.h[grid.idx(i, j)] - b.h[grid.idx(i, j)]) * grid.mu_weights[static_cast<std::size_t>(j)];
  return d * grid.dx;
}

struct FunctionalRow {
  double t = 0.0;
  double D = 0.0, Ipp = 0.0, Ixp = 0.0, Ixx = 0.0;
  double Emod = std::numeric_limits<double>::quiet_NaN();
  double mass = 0.0, l1_dist = 0.0;
};

struct FunctionalSeries {
  std::vector<FunctionalRow> rows;

  std::vector<double> times() const { return column(&FunctionalRow::t); }
  std::vector<double> column(double FunctionalRow::*field) const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
  }
};

namespace solver_detail {

// Central differences: periodic in x, reflecting ghost cell at the p ends.
struct Stencil {
  const PhaseGrid& G;
  std::span<const double> f;

  double at(int i, int j) const {
    i = ((i % G.Nx) + G.Nx) % G.Nx;
    j = std::clamp(j, 0, G.Np - 1);
    return f[G.idx(i, j)];
  }
  double dx(int i, int j) const { return (at(i + 1, j) - at(i - 1, j)) / (2.0 * G.dx); }
  double dp(int i, int j) const { return (at(i, j + 1) - at(i, j - 1)) / (2.0 * G.dp); }
  double dpp(int i, int j) const { return (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (G.dp * G.dp); }
  double dxp(int i, int j) const {
    return ((at(i + 1, j + 1) - at(i - 1, j + 1)) - (at(i + 1, j - 1) - at(i - 1, j - 1))) / (4.0 * G.dx * G.dp);
  }
};

inline double log_floor(double h, double mass) { return std::log(std::max(h, 1e-14 * mass)); }

// h log(h/M) - h + M without cancellation near h = M
inline double entropy_density(double h, double M, double floor) {
  if (h < floor) return h * std::log(floor / M) - h + M;
  const double d = (h - M) / M;
  if (std::abs(d) >= 0.1) return h * std::log(h / M) - h + M;
  // sum_{n >= 2} (-d)^n / (n (n - 1))
  double pw = d * d, sum = 0.0;
  for (int n = 2; n < 40; ++n, pw *= -d) {
    const double term = pw / (n * (n - 1.0));
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return M * sum;
}

}  // namespace solver_detail

/// D, Ipp, Ixp, Ixx, mass and L1 distance to equilibrium; Emod when (a, b, c, k) is given.
inline FunctionalRow functionals(const State& s, const PhaseGrid& grid, std::optional<ABCK> coeffs = std::nullopt) {
  FunctionalRow r;
  r.t = s.t;
  r.mass = mass(s, grid);
  const double M = r.mass;
  const double floor = 1e-14 * std::abs(M);
  solver_detail::Stencil S{grid, s.h};
  for (int i = 0; i < grid.Nx; ++i)
    for (int j = 0; j < grid.Np; ++j) {
      const std::size_t J = static_cast<std::size_t>(j);
      const double w = grid.dx * grid.mu_weights[J];
      const double h = s.h[grid.idx(i, j)];
      const double hf = std::max(h, floor);
      const double hp = S.dp(i, j), hx = S.dx(i, j);
      const double gi = grid.ginv[J], dv = grid.dv[J];
      r.D += w * solver_detail::entropy_density(h, M, floor);
      r.Ipp += w * gi * hp * hp / hf;
      r.Ixx += w * gi * dv * dv * hx * hx / hf;
      r.Ixp += w * gi * dv * hx * hp / hf;
      r.l1_dist += w * std::abs(h - M);
    }
  if (coeffs) r.Emod = coeffs->k * r.D + coeffs->a * r.Ipp + 2.0 * coeffs->b * r.Ixp + coeffs->c * r.Ixx;
  return r;
}

inline FunctionalRow functionals(const State& s, const Model& model, const PhaseGrid& grid,
                                 std::optional<ABCK> coeffs = std::nullopt) {
  solver_detail::require_1d(model);
  return functionals(s, grid, coeffs);
}

struct RunOptions {
  double dt = 1e-3;
  double sample_dt = 0.1;
  StepOptions step;
  double allowance = 0.1;  // fraction of lambda given up in the decay check
};

struct DecayCheck {
  bool checked = false;
  double lambda = 0.0;
  int violations = 0;
  double first_violation_t = std::numeric_limits<double>::quiet_NaN();
  bool ok() const { return violations == 0; }
};

struct RunResult {
  FunctionalSeries series;
  State final_state;
  double dt_used = 0.0;
  double mass_drift = 0.0;  // max |mass(t) - mass(0)|
  DecayCheck decay;
};

/// Emod(t) e^{(1 - allowance) lambda t} must not increase between consecutive samples.
inline DecayCheck check_certified_decay(const FunctionalSeries& s, double lambda, double allowance = 0.1) {
  DecayCheck dc;
  dc.checked = true;
  dc.lambda = lambda;
  const double rate = (1.0 - allowance) * lambda;
  if (s.rows.empty()) return dc;
  const double scale = std::abs(s.rows.front().Emod);
  for (std::size_t n = 1; n < s.rows.size(); ++n) {
    const auto& a = s.rows[n - 1];
    const auto& b = s.rows[n];
    const double lhs = b.Emod * std::exp(rate * (b.t - a.t));
    if (lhs > a.Emod * (1.0 + 1e-12) + 1e-13 * scale) {
      if (dc.violations == 0) dc.first_violation_t = b.t;
      ++dc.violations;
    }
  }
  return dc;
}

/// Sample-wise checks of a run: D non-increasing and l1_dist <= sqrt(2 D).
/// Both allow for roundoff once the state sits at the machine-precision floor.
struct SeriesChecks {
  bool D_monotone = true;
  bool csiszar_kullback = true;
  double first_D_increase_t = std::numeric_limits<double>::quiet_NaN();
  double first_ck_violation_t = std::numeric_limits<double>::quiet_NaN();
};

inline SeriesChecks check_series(const FunctionalSeries& s) {
  SeriesChecks c;
  if (s.rows.empty()) return c;
  const double D0 = s.rows.front().D, m0 = std::abs(s.rows.front().mass);
  for (std::size_t n = 0; n < s.rows.size(); ++n) {
    const auto& r = s.rows[n];
    if (n > 0 && r.D > s.rows[n - 1].D * (1.0 + 1e-12) + 1e-14 * D0 && c.D_monotone) {
      c.D_monotone = false;
      c.first_D_increase_t = r.t;
    }
    if (r.l1_dist > std::sqrt(2.0 * std::max(r.D, 0.0)) + 1e-12 * m0 && c.csiszar_kullback) {
      c.csiszar_kullback = false;
      c.first_ck_violation_t = r.t;
    }
  }
  return c;
}

/// Leading samples with D above rel_floor * D(0); later samples sit at the roundoff floor.
inline FunctionalSeries above_roundoff(const FunctionalSeries& s, double rel_floor = 1e-20) {
  FunctionalSeries out;
  if (s.rows.empty()) return out;
  const double D0 = s.rows.front().D;
  for (const auto& r : s.rows) {
    if (!(r.D > rel_floor * D0)) break;
    out.rows.push_back(r);
  }
  return out;
}

namespace solver_detail {
[[noreturn]] inline void rethrow_with_time(double t) {
  const std::string at = " (at t = " + std::to_string(t) + ")";
  try {
    throw;
  } catch (const CFLViolation& e) {
    throw CFLViolation(e.what() + at);
  } catch (const LinearSolveFailure& e) {
    throw LinearSolveFailure(e.what() + at);
  }
}
}  // namespace solver_detail

/// Integrate to tmax, sampling every sample_dt. With a certificate the decay of Emod is checked.
inline RunResult run(const PhaseGrid& grid, const State& h_in, double tmax, const RunOptions& opt,
                     const Certificate* cert = nullptr) {
  if (!(tmax >= 0.0) || !(opt.sample_dt > 0.0) || !(opt.dt > 0.0)) throw ConfigError("run needs tmax >= 0, dt > 0, sample_dt > 0");
  if (h_in.h.size() != grid.size()) throw ConfigError("initial state does not match the grid");
  for (double x : h_in.h)
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("initial datum must be finite and nonnegative");
  std::optional<ABCK> coeffs;
  if (cert) coeffs = ABCK{cert->a, cert->b, cert->c, cert->k};

  const int per_sample = std::max(1, static_cast<int>(std::ceil(opt.sample_dt / opt.dt - 1e-9)));
  const double dt = opt.sample_dt / per_sample;
  const int samples = static_cast<int>(std::floor(tmax / opt.sample_dt + 1e-9));

  RunResult res;
  res.dt_used = dt;
  State s = h_in;
  s.t = 0.0;
  Stepper stepper(grid, opt.step);
  res.series.rows.push_back(functionals(s, grid, coeffs));
  const double m0 = res.series.rows.front().mass;
  if (!(m0 > 0.0)) throw DomainError("initial datum has zero mass");
  for (int n = 1; n <= samples; ++n) {
    for (int k = 0; k < per_sample; ++k) {
      try {
        stepper.step(s, dt);
      } catch (const Error&) {
        solver_detail::rethrow_with_time(s.t);
      }
    }
    s.t = n * opt.sample_dt;
    res.series.rows.push_back(functionals(s, grid, coeffs));
    res.mass_drift = std::max(res.mass_drift, std::abs(res.series.rows.back().mass - m0));
  }
  if (cert) res.decay = check_certified_decay(res.series, cert->lambda, opt.allowance);
  res.final_state = std::move(s);
  return res;
}

inline RunResult run(const Model& model, const PhaseGrid& grid, const State& h_in, double tmax, const RunOptions& opt,
                     const Certificate* cert = nullptr) {
  solver_detail::require_1d(model);
  return run(grid, h_in, tmax, opt, cert);
}

struct RateFit {
  double lambda_emp = 0.0;  // minus the slope of log(values) against t
  double r2 = 0.0;
  int samples = 0;
};

/// Least-squares fit of log(values) ~ c - lambda t over the last `window` fraction of samples.
inline RateFit fit_rate(std::span<const double> times, std::span<const double> values, double window = 0.5) {
  if (times.size() != values.size()) throw ConfigError("fit_rate: times and values differ in length");
  if (!(window > 0.0 && window <= 1.0)) throw ConfigError("fit_rate: window must lie in (0, 1]");
  const std::size_t n = times.size();
  const std::size_t take = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  if (take < 10) throw InsufficientData("fit_rate needs at least 10 samples in the window");
  const std::size_t start = n - take;
  std::vector<double> t, y;
  for (std::size_t i = start; i < n; ++i) {
    if (!(values[i] > 0.0)) throw NonpositiveValues("fit_rate needs positive values");
    t.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= static_cast<double>(take);
  ym /= static_cast<double>(take);
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  if (!(stt > 0.0)) throw InsufficientData("fit_rate needs distinct sample times");
  const double slope = sty / stt;
  RateFit f;
  f.lambda_emp = -slope;
  f.samples = static_cast<int>(take);
  double sse = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const double r = y[i] - (ym + slope * (t[i] - tm));
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

// ---------------------------------------------------------------------------------------------
// Ornstein-Uhlenbeck reference (classical model, M = 1): a Gaussian N(mu0, s0^2) density stays
// Gaussian with mean mu0 e^{-t} and variance 1 + (s0^2 - 1) e^{-2t}.

namespace ou {
inline double mean(double mu0, double t) { return mu0 * std::exp(-t); }
inline double variance(double s0, double t) { return 1.0 + (s0 * s0 - 1.0) * std::exp(-2.0 * t); }
/// Relative entropy of N(mu, s2) with respect to N(0, 1).
inline double entropy(double mu, double s2) { return 0.5 * (s2 - 1.0 - std::log(s2) + mu * mu); }
inline double entropy_at(double mu0, double s0, double t) { return entropy(mean(mu0, t), variance(s0, t)); }
/// Density ratio N(mu0, s0^2) / N(0, 1) at p.
inline double gaussian_ratio(double mu0, double s0, double p) {
  const double z = (p - mu0) / s0;
  return std::exp(-0.5 * z * z + 0.5 * p * p) / s0;
}
}  // namespace ou

// ---------------------------------------------------------------------------------------------
// Entropy-production diagnostics: both sides of the four time-derivative identities, plus the
// discrete self-adjointness and Stokes residuals of L.

struct NodeGeometry {
  // per p-node: g^{pp}, Gamma^p_pp, d_p v, covariant Hessian of v, Bakry-Emery-Ricci,
  // d_p log u, and the divergence of the (2,0) Hessian of v
  std::vector<double> ginv, gamma, dv, hess_v, ric_tilde, dlogu, div_hess_v;
};

inline NodeGeometry node_geometry(const Model& model, const PhaseGrid& grid, const DerivOptions& opt = {}) {
  solver_detail::require_1d(model);
  NodeGeometry ng;
  for (double p : grid.p_nodes) {
    const double q[1] = {p};
    PointData pd = point_data(model, std::span<const double>(q, 1), opt, 3);
    const auto& geo = pd.geo;
    const Jet gi = geo.ginv(0, 0);
    const Jet hv = geo.hessian(pd.fields.v[0])[0];
    const Jet T = gi * gi * hv;
    const std::vector<Jet> Tv{T};
    ng.ginv.push_back(gi.value());
    ng.gamma.push_back(geo.gamma(0, 0, 0).value());
    ng.dv.push_back(pd.fields.v[0].d1(0));
    ng.hess_v.push_back(hv.value());
    ng.ric_tilde.push_back(geo.ricci()[0].value() - geo.hessian(pd.log_u)[0].value());
    ng.dlogu.push_back(pd.log_u.d1(0));
    ng.div_hess_v.push_back(geo.divergence2(Tv)[0].value());
  }
  return ng;
}

/// Right-hand sides of the identities for dD/dt, dIpp/dt, dIxp/dt, dIxx/dt at a state.
struct ProductionTerms {
  double dD = 0.0, dIpp = 0.0, dIxp = 0.0, dIxx = 0.0;
};

inline ProductionTerms production_terms(const State& s, const PhaseGrid& grid, const NodeGeometry& ng) {
  const double M = mass(s, grid);
  std::vector<double> hb(s.h.size());
  for (std::size_t k = 0; k < s.h.size(); ++k) hb[k] = solver_detail::log_floor(s.h[k], M);
  solver_detail::Stencil H{grid, s.h}, B{grid, hb};
  const FunctionalRow f = functionals(s, grid);
  ProductionTerms r;
  r.dD = -f.Ipp;
  double ric_pp = 0, hh_pp = 0, ric_xp = 0, cross_xp = 0, b_xp = 0, c_xp = 0, w_xp = 0;
  double om_xx = 0, b_xx = 0, c_xx = 0, w_xx = 0;
  for (int i = 0; i < grid.Nx; ++i)
    for (int j = 0; j < grid.Np; ++j) {
      const std::size_t J = static_cast<std::size_t>(j);
      const double w = grid.dx * grid.mu_weights[J];
      const double h = s.h[grid.idx(i, j)];
      const double gi = ng.ginv[J], dv = ng.dv[J], hv = ng.hess_v[J];
      const double a = B.dp(i, j);                       // d_p hbar
      const double Hh = B.dpp(i, j) - ng.gamma[J] * a;   // covariant Hessian of hbar
      const double X = B.dx(i, j), Xp = B.dxp(i, j);     // d_x hbar, d_x d_p hbar
      const double hx = H.dx(i, j);
      const double Om = Xp * dv + X * hv;                // covariant derivative of (A_x hbar)_*
      ric_pp += w * h * ng.ric_tilde[J] * gi * gi * a * a;
      hh_pp += w * h * gi * gi * Hh * Hh;
      ric_xp += w * h * ng.ric_tilde[J] * (gi * dv * X) * (gi * a);
      cross_xp += w * h * gi * gi * Hh * Om;
      b_xp += w * a * hx * ng.div_hess_v[J];
      c_xp += w * h * gi * gi * Hh * X * hv;
      w_xp += w * hx * gi * gi * hv * ng.dlogu[J] * a;
      om_xx += w * h * gi * gi * Om * Om;
      b_xx += w * dv * X * hx * ng.div_hess_v[J];
      c_xx += w * h * gi * gi * Om * X * hv;
      w_xx += w * hx * gi * gi * hv * ng.dlogu[J] * dv * X;
    }
  r.dIpp = -2.0 * f.Ixp - 2.0 * ric_pp - 2.0 * hh_pp;
  r.dIxp = -f.Ixx - ric_xp - 2.0 * cross_xp + b_xp + 2.0 * c_xp + w_xp;
  r.dIxx = -2.0 * om_xx + 2.0 * b_xx + 4.0 * c_xx + 2.0 * w_xx;
  return r;
}

struct Residual {
  std::string name;
  double time_side = 0.0;   // finite-difference derivative, or first inner product
  double space_side = 0.0;  // quadrature of the identity, or second inner product
  double abs_residual = 0.0;
  double rel_residual = 0.0;
};

struct DiagnosticsReport {
  double dt = 0.0;
  std::vector<Residual> rows;
  const Residual& operator[](const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw ConfigError("no residual named " + name);
  }
};

struct DiagnosticsOptions {
  double dt = 1e-4;
  StepOptions step{.muscl = true};
  DerivOptions deriv;
};

inline DiagnosticsReport entropy_production_diagnostics(const State& s, const Model& model, const PhaseGrid& grid,
                                                        const DiagnosticsOptions& opt = {}) {
  const NodeGeometry ng = node_geometry(model, grid, opt.deriv);
  DiagnosticsReport rep;
  rep.dt = opt.dt;
  State s1 = s;
  Stepper(grid, opt.step).step(s1, opt.dt);
  const FunctionalRow f0 = functionals(s, grid), f1 = functionals(s1, grid);
  const ProductionTerms p0 = production_terms(s, grid, ng), p1 = production_terms(s1, grid, ng);
  auto add = [&](std::string name, double lhs, double rhs, double scale) {
    Residual r{std::move(name), lhs, rhs, std::abs(lhs - rhs), 0.0};
    const double den = std::max({std::abs(lhs), std::abs(rhs), scale});
    r.rel_residual = den > 0.0 ? r.abs_residual / den : 0.0;
    rep.rows.push_back(r);
  };
  const double tiny = 1e-300;
  add("dD/dt", (f1.D - f0.D) / opt.dt, 0.5 * (p0.dD + p1.dD), tiny);
  add("dIpp/dt", (f1.Ipp - f0.Ipp) / opt.dt, 0.5 * (p0.dIpp + p1.dIpp), tiny);
  add("dIxp/dt", (f1.Ixp - f0.Ixp) / opt.dt, 0.5 * (p0.dIxp + p1.dIxp), tiny);
  add("dIxx/dt", (f1.Ixx - f0.Ixx) / opt.dt, 0.5 * (p0.dIxx + p1.dIxx), tiny);

  // <h, L hbar> against <hbar, L h>, and <1, L h>, column by column
  const DiffusionOperator L = diffusion_matrix(grid);
  const double M = mass(s, grid);
  const auto Np = static_cast<std::size_t>(grid.Np);
  std::vector<double> f(Np), q(Np), Lf(Np), Lq(Np);
  double fLq = 0, qLf = 0, stokes = 0, scale_sa = 0, scale_st = 0;
  for (int i = 0; i < grid.Nx; ++i) {
    for (std::size_t j = 0; j < Np; ++j) {
      f[j] = s.h[grid.idx(i, static_cast<int>(j))];
      q[j] = solver_detail::log_floor(f[j], M);
    }
    L.apply(f, Lf);
    L.apply(q, Lq);
    for (std::size_t j = 0; j < Np; ++j) {
      const double w = grid.dx * grid.mu_weights[j];
      fLq += w * f[j] * Lq[j];
      qLf += w * q[j] * Lf[j];
      stokes += w * Lf[j];
      scale_sa += w * (std::abs(f[j] * Lq[j]) + std::abs(q[j] * Lf[j]));
      scale_st += w * std::abs(Lf[j]);
    }
  }
  add("self-adjointness", fLq, qLf, scale_sa);
  add("stokes", stokes, 0.0, scale_st);
  return rep;
}

}  // namespace kfp
