#pragma once

// Run configuration for the command-line tool. The file is INI:
//
//   [model]        source = classical | relativistic | <path to model file>
//                  theta = 4
//                  dim = 3
//   [grid]         Nx = 64, Np = 128, P = 8
//   [scan]         radius = 10, resolution = 41, quasi_random = 2000, seed = 20240601
//   [time]         tmax = 10, dt = 0 (0 picks half the CFL limit), sample_dt = 0.1
//   [initial]      h = 1 + 0.5*cos(2*pi*x)     (expression in x and p)
//   [certificate]  margin = 0.05, path = <certificate file>
//   [output]       dir = out
//
// Every key is optional.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>

#include "kfp/assumptions.hpp"
#include "kfp/errors.hpp"
#include "kfp/expr.hpp"
#include "kfp/model.hpp"

namespace kfp {

struct RunConfig {
  std::string model = "classical";
  std::optional<double> theta;
  int dim = 3;
  int Nx = 64, Np = 128;
  double P = 8.0;
  GridSpec scan;
  double tmax = 10.0;
  double dt = 0.0;
  double sample_dt = 0.1;
  std::string initial = "1 + 0.5*cos(2*pi*x)";
  double margin = 0.05;
  std::string certificate_path;
  std::string output_dir = ".";
};

inline void validate(const RunConfig& c) {
  if (c.theta && !(*c.theta > 0.0)) throw ConfigError("theta must be positive");
  if (c.dim < 1 || c.dim > kMaxJetDim) throw ConfigError("dim must be between 1 and 4");
  if (c.Nx < 8 || c.Np < 8) throw ConfigError("Nx and Np must be at least 8");
  if (!(c.P > 0.0)) throw ConfigError("P must be positive");
  if (!(c.scan.radius > 0.0) || c.scan.resolution < 2 || c.scan.quasi_random < 0)
    throw ConfigError("scan needs radius > 0, resolution >= 2, quasi_random >= 0");
  if (!(c.tmax >= 0.0) || !(c.dt >= 0.0) || !(c.sample_dt > 0.0))
    throw ConfigError("time needs tmax >= 0, dt >= 0, sample_dt > 0");
  if (!(c.margin > 0.0 && c.margin < 1.0)) throw ConfigError("margin must lie in (0, 1)");
}

namespace config_detail {

// ptree's get(key, default) silently falls back on a malformed value; parse strictly instead.
template <class T>
void read(const boost::property_tree::ptree& t, const std::string& key, T& out) {
  const auto raw = t.get_optional<std::string>(key);
  if (!raw) return;
  const std::string& v = *raw;
  if constexpr (std::is_same_v<T, std::string>) {
    out = v;
  } else {
    T x{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
    out = x;
  }
}

}  // namespace config_detail

inline RunConfig load_run_config(std::istream& in, RunConfig c = {}) {
  namespace pt = boost::property_tree;
  pt::ptree t;
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  using config_detail::read;
  read(t, "model.source", c.model);
  if (t.get_optional<std::string>("model.theta")) {
    double th = 0.0;
    read(t, "model.theta", th);
    c.theta = th;
  }
  read(t, "model.dim", c.dim);
  read(t, "grid.Nx", c.Nx);
  read(t, "grid.Np", c.Np);
  read(t, "grid.P", c.P);
  read(t, "scan.radius", c.scan.radius);
  read(t, "scan.resolution", c.scan.resolution);
  read(t, "scan.quasi_random", c.scan.quasi_random);
  read(t, "scan.seed", c.scan.seed);
  read(t, "time.tmax", c.tmax);
  read(t, "time.dt", c.dt);
  read(t, "time.sample_dt", c.sample_dt);
  read(t, "initial.h", c.initial);
  read(t, "certificate.margin", c.margin);
  read(t, "certificate.path", c.certificate_path);
  read(t, "output.dir", c.output_dir);
  return c;
}

inline RunConfig load_run_config_file(const std::string& path, RunConfig c = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return load_run_config(in, c);
}

inline Model resolve_model(const std::string& source, std::optional<double> theta, int dim) {
  if (source == "classical") return builtin_classical(dim);
  if (source == "relativistic") return builtin_relativistic(theta.value_or(4.0), dim);
  return load_model_file(source, theta);
}

/// Initial datum as a function of (x, p), from an expression in the variables x and p.
inline std::function<double(double, double)> initial_datum(const std::string& text) {
  Expr e = parse_expr(text, {"x", "p"});
  return [e](double x, double p) {
    const double v[2] = {x, p};
    return eval(e, std::span<const double>(v, 2));
  };
}

}  // namespace kfp
