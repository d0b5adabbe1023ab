#pragma once

// Model descriptions: the triple (g, v, E) on the momentum space R^M.

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kfp/errors.hpp"
#include "kfp/expr.hpp"
#include "kfp/jet.hpp"

namespace kfp {

/// Model fields evaluated on jets at one point: g (row-major M x M), v (M), E.
struct FieldJets {
  int dim = 0;
  std::vector<Jet> g;
  std::vector<Jet> v;
  Jet E;

  const Jet& gij(int i, int j) const { return g[static_cast<std::size_t>(i * dim + j)]; }
};

enum class ModelKind { Classical, Relativistic, User };

class Model {
 public:
  using Evaluator = std::function<FieldJets(std::span<const Jet>)>;

  Model(std::string name, int dim, ModelKind kind, std::optional<double> theta, Evaluator eval)
      : name_(std::move(name)), dim_(dim), kind_(kind), theta_(theta), eval_(std::move(eval)) {
    if (dim_ < 1 || dim_ > kMaxJetDim) throw ConfigError("model dimension must be between 1 and 4");
  }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  ModelKind kind() const { return kind_; }
  std::optional<double> theta() const { return theta_; }

  /// Fields at the point whose coordinates are the values of p; derivatives follow the jets.
  FieldJets fields(std::span<const Jet> p) const { return eval_(p); }

  FieldJets fields(std::span<const double> p, int order) const {
    auto jets = Jet::variables(p, order);
    return eval_(jets);
  }

  double energy(std::span<const double> p) const { return fields(p, 0).E.value(); }

 private:
  std::string name_;
  int dim_;
  ModelKind kind_;
  std::optional<double> theta_;
  Evaluator eval_;
};

inline Model builtin_classical(int M) {
  if (M < 1) throw ConfigError("classical model needs M >= 1");
  return Model("classical", M, ModelKind::Classical, std::nullopt, [M](std::span<const Jet> p) {
    FieldJets f;
    f.dim = M;
    const Jet one = Jet::constant(1.0, M, p[0].order());
    const Jet zero = Jet::constant(0.0, M, p[0].order());
    f.g.assign(static_cast<std::size_t>(M * M), zero);
    for (int i = 0; i < M; ++i) f.g[static_cast<std::size_t>(i * M + i)] = one;
    f.v.assign(p.begin(), p.end());
    Jet r2 = zero;
    for (const Jet& q : p) r2 += q * q;
    f.E = 0.5 * r2;
    return f;
  });
}

/// Relativistic model: g_ij = p0 (delta_ij - p_i p_j / p0^2), v = p / p0, E = theta p0.
inline Model builtin_relativistic(double theta, int M = 3) {
  if (!(theta > 0.0)) throw ConfigError("relativistic model needs theta > 0");
  if (M < 1) throw ConfigError("relativistic model needs M >= 1");
  return Model("relativistic", M, ModelKind::Relativistic, theta, [M, theta](std::span<const Jet> p) {
    FieldJets f;
    f.dim = M;
    Jet r2 = Jet::constant(1.0, M, p[0].order());
    for (const Jet& q : p) r2 += q * q;
    const Jet p0 = sqrt(r2);
    const Jet inv_p0 = 1.0 / p0;
    f.g.resize(static_cast<std::size_t>(M * M));
    for (int i = 0; i < M; ++i) {
      for (int j = i; j < M; ++j) {
        Jet gij = -(p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)]) * inv_p0;
        if (i == j) gij += p0;
        f.g[static_cast<std::size_t>(i * M + j)] = gij;
        f.g[static_cast<std::size_t>(j * M + i)] = gij;
      }
    }
    for (const Jet& q : p) f.v.push_back(q * inv_p0);
    f.E = theta * p0;
    return f;
  });
}

/// Model given by expressions in p1..pM (and theta, bound at construction).
struct ExpressionModelSource {
  std::string name = "user";
  int dim = 0;
  std::optional<double> theta;
  std::vector<std::string> g;  // row-major M x M, symmetric
  std::vector<std::string> v;
  std::string E;
};

inline std::vector<std::string> model_expr_vars(int M) {
  std::vector<std::string> vars;
  for (int i = 1; i <= M; ++i) vars.push_back("p" + std::to_string(i));
  vars.push_back("theta");
  return vars;
}

inline Model expression_model(const ExpressionModelSource& src) {
  const int M = src.dim;
  if (M < 1 || M > kMaxJetDim) throw ConfigError("model dimension must be between 1 and 4");
  if (static_cast<int>(src.g.size()) != M * M || static_cast<int>(src.v.size()) != M)
    throw ConfigError("model needs M*M metric entries and M velocity components");
  const auto vars = model_expr_vars(M);
  auto prepare = [&](const std::string& text) {
    Expr e = parse_expr(text, vars);
    if (depends_on(e.root(), M)) {
      if (!src.theta) throw ConfigError("expression uses theta but no theta was given: " + text);
      e = bind(e, "theta", *src.theta);
    }
    return e;
  };
  auto g = std::make_shared<std::vector<Expr>>();
  auto v = std::make_shared<std::vector<Expr>>();
  for (const auto& t : src.g) g->push_back(prepare(t));
  for (const auto& t : src.v) v->push_back(prepare(t));
  auto E = std::make_shared<Expr>(prepare(src.E));
  return Model(src.name, M, ModelKind::User, src.theta, [M, g, v, E](std::span<const Jet> p) {
    std::vector<Jet> slots(p.begin(), p.end());
    slots.push_back(Jet::constant(0.0, M, p[0].order()));  // theta slot, already bound
    FieldJets f;
    f.dim = M;
    for (const auto& e : *g) f.g.push_back(eval(e, slots));
    for (const auto& e : *v) f.v.push_back(eval(e, slots));
    f.E = eval(*E, slots);
    return f;
  });
}

/// Reads a model file:
///
///   dim = 1
///   theta = 4           ; optional
///   [metric]
///   g11 = 1/sqrt(1+p1^2)
///   [velocity]
///   v1 = p1/sqrt(1+p1^2)
///   [energy]
///   E = theta*sqrt(1+p1^2)
///
/// Off-diagonal metric entries may be given once (gij or gji); missing ones are zero.
inline ExpressionModelSource parse_model_source(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  ExpressionModelSource src;
  try {
    src.dim = tree.get<int>("dim");
  } catch (const pt::ptree_error&) {
    throw ConfigError("model file: missing or invalid 'dim'");
  }
  if (src.dim < 1 || src.dim > kMaxJetDim) throw ConfigError("model file: dim must be between 1 and 4");
  if (auto th = tree.get_optional<double>("theta")) src.theta = *th;
  src.name = tree.get<std::string>("name", "user");
  const int M = src.dim;
  src.g.assign(static_cast<std::size_t>(M * M), "0");
  for (int i = 1; i <= M; ++i) {
    for (int j = i; j <= M; ++j) {
      auto a = tree.get_optional<std::string>("metric.g" + std::to_string(i) + std::to_string(j));
      auto b = tree.get_optional<std::string>("metric.g" + std::to_string(j) + std::to_string(i));
      if (a && b && i != j && *a != *b) throw ConfigError("model file: conflicting metric entries g" + std::to_string(i) + std::to_string(j));
      std::string text = a ? *a : b ? *b : std::string();
      if (text.empty()) {
        if (i == j) throw ConfigError("model file: missing diagonal metric entry g" + std::to_string(i) + std::to_string(i));
        continue;
      }
      src.g[static_cast<std::size_t>((i - 1) * M + (j - 1))] = text;
      src.g[static_cast<std::size_t>((j - 1) * M + (i - 1))] = text;
    }
  }
  for (int i = 1; i <= M; ++i) {
    auto t = tree.get_optional<std::string>("velocity.v" + std::to_string(i));
    if (!t) throw ConfigError("model file: missing velocity component v" + std::to_string(i));
    src.v.push_back(*t);
  }
  auto e = tree.get_optional<std::string>("energy.E");
  if (!e) throw ConfigError("model file: missing [energy] E");
  src.E = *e;
  return src;
}

inline Model load_model_file(const std::string& path, std::optional<double> theta_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path);
  ExpressionModelSource src = parse_model_source(in);
  if (theta_override) src.theta = theta_override;
  return expression_model(src);
}

}  // namespace kfp
