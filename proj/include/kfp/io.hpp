#pragma once

// Plain-text outputs: key = value files, the functional-series CSV, and the
// text blocks used by the report.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kfp/assumptions.hpp"
#include "kfp/certificate.hpp"
#include "kfp/errors.hpp"
#include "kfp/solver.hpp"

namespace kfp {

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || ptr != e) throw ConfigError("not a number: '" + s + "'");
  return x;
}

/// Ordered key = value list.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : items_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    items_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const {
    for (const auto& kv : items_)
      if (kv.first == key) return true;
    return false;
  }
  const std::string& get(const std::string& key) const {
    for (const auto& kv : items_)
      if (kv.first == key) return kv.second;
    throw ConfigError("missing key '" + key + "'");
  }
  double number(const std::string& key) const { return parse_double(get(key)); }
  bool flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + key + "' is not true/false");
  }
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : items_) os << k << " = " << v << '\n';
  }

  static KeyValues read(std::istream& is) {
    KeyValues kv;
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key = value");
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << content;
}

inline KeyValues read_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  return KeyValues::read(is);
}

inline std::string format_point(const Vec& p) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += format_double(p(i));
  }
  return s + ")";
}

inline KeyValues report_to_kv(const AssumptionReport& r) {
  KeyValues kv;
  kv.set("model", r.model_name);
  kv.set("dim", r.dim);
  if (r.theta) kv.set("theta", *r.theta);
  kv.set("grid_radius", r.grid.spec.radius);
  kv.set("grid_resolution", r.grid.spec.resolution);
  kv.set("grid_quasi_random", r.grid.spec.quasi_random);
  kv.set("grid_seed", std::to_string(r.grid.spec.seed));
  kv.set("grid_points", static_cast<int>(r.grid.points.size()));
  kv.set("sigma1", r.sigma1());
  kv.set("sigma2", r.sigma2());
  kv.set("sigma", r.sigma());
  kv.set("beta", r.beta());
  kv.set("gamma", r.gamma());
  kv.set("omega", r.omega());
  if (r.alpha) kv.set("alpha", *r.alpha);
  kv.set("alpha_source", to_string(r.alpha_source));
  kv.set("hormander_min_absdetF", r.hormander.min_abs_det_F);
  kv.set("curvature_ok", r.curvature_ok());
  kv.set("A_positive", r.dominance.a_positive);
  kv.set("hormander_ok", r.hormander.ok);
  kv.set("growth_ok", r.growth.ok);
  kv.set("required_ok", r.required_ok());
  kv.set("sigma1_witness", format_point(r.curvature.min_witness.at));
  return kv;
}

inline Constants constants_from_kv(const KeyValues& kv) {
  Constants k;
  k.sigma1 = kv.number("sigma1");
  k.sigma2 = kv.number("sigma2");
  k.beta = kv.number("beta");
  k.gamma = kv.number("gamma");
  k.omega = kv.number("omega");
  return k;
}

inline KeyValues certificate_to_kv(const Certificate& c) {
  KeyValues kv;
  kv.set("sigma1", c.constants.sigma1);
  kv.set("sigma2", c.constants.sigma2);
  kv.set("beta", c.constants.beta);
  kv.set("gamma", c.constants.gamma);
  kv.set("omega", c.constants.omega);
  kv.set("alpha", c.alpha);
  kv.set("margin", c.margin);
  kv.set("s", c.s);
  kv.set("s1", c.s1);
  kv.set("s2", c.s2);
  kv.set("a", c.a);
  kv.set("b", c.b);
  kv.set("c", c.c);
  kv.set("k", c.k);
  kv.set("d", c.d);
  kv.set("lambda", c.lambda);
  kv.set("M_bound", c.M_bound);
  kv.set("coef_Ipp", c.coef_Ipp);
  kv.set("coef_Ixx", c.coef_Ixx);
  kv.set("coef_Qpp", c.coef_Qpp);
  kv.set("coef_Qxp", c.coef_Qxp);
  for (int i = 1; i <= 10; ++i) kv.set("eps" + std::to_string(i), c.eps[i]);
  kv.set("b_le_sqrt_ac", c.b <= std::sqrt(c.a * c.c));
  kv.set("valid", c.valid);
  return kv;
}

inline Certificate certificate_from_kv(const KeyValues& kv) {
  Certificate c;
  c.constants = constants_from_kv(kv);
  c.alpha = kv.number("alpha");
  c.margin = kv.number("margin");
  c.s = kv.number("s");
  c.s1 = kv.number("s1");
  c.s2 = kv.number("s2");
  c.a = kv.number("a");
  c.b = kv.number("b");
  c.c = kv.number("c");
  c.k = kv.number("k");
  c.d = kv.number("d");
  c.lambda = kv.number("lambda");
  c.M_bound = kv.number("M_bound");
  c.coef_Ipp = kv.number("coef_Ipp");
  c.coef_Ixx = kv.number("coef_Ixx");
  c.coef_Qpp = kv.number("coef_Qpp");
  c.coef_Qxp = kv.number("coef_Qxp");
  for (int i = 1; i <= 10; ++i) c.eps.eps[static_cast<std::size_t>(i - 1)] = kv.number("eps" + std::to_string(i));
  c.valid = kv.flag("valid");
  return c;
}

inline void write_series_csv(std::ostream& os, const FunctionalSeries& s) {
  os << "t,D,Ipp,Ixp,Ixx,Emod,mass,l1_dist\n";
  for (const auto& r : s.rows) {
    os << format_double(r.t) << ',' << format_double(r.D) << ',' << format_double(r.Ipp) << ','
       << format_double(r.Ixp) << ',' << format_double(r.Ixx) << ',' << format_double(r.Emod) << ','
       << format_double(r.mass) << ',' << format_double(r.l1_dist) << '\n';
  }
}

inline FunctionalSeries read_series_csv(std::istream& is) {
  FunctionalSeries s;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,D,Ipp,Ixp,Ixx,Emod,mass,l1_dist", 0) != 0)
    throw ConfigError("series CSV: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(parse_double(cell));
    if (f.size() != 8) throw ConfigError("series CSV: expected 8 columns");
    s.rows.push_back({f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]});
  }
  return s;
}

inline void write_diagnostics(std::ostream& os, const DiagnosticsReport& rep) {
  os << "identity,time_side,space_side,abs_residual,rel_residual\n";
  for (const auto& r : rep.rows)
    os << r.name << ',' << format_double(r.time_side) << ',' << format_double(r.space_side) << ','
       << format_double(r.abs_residual) << ',' << format_double(r.rel_residual) << '\n';
}

}  // namespace kfp
