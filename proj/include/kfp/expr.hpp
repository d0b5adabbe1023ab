#pragma once

// Small arithmetic expression language used for user-defined models and
// initial data.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Functions: sqrt, exp, log, sin, cos. The identifier pi is a constant unless it
// names a variable. A unary minus applied directly to a numeric
// literal is folded into a negative constant.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/jet.hpp"

namespace kfp {

enum class Op { Num, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Exp, Log, Sin, Cos };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  Op op;
  double value = 0.0;  // Num
  int slot = -1;       // Var
  NodePtr a, b;
};

class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, std::vector<std::string> vars) : root_(std::move(root)), vars_(std::move(vars)) {}

  const NodePtr& root() const { return root_; }
  const std::vector<std::string>& vars() const { return vars_; }
  bool valid() const { return root_ != nullptr; }

  int slot_of(std::string_view name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return static_cast<int>(i);
    return -1;
  }

 private:
  NodePtr root_;
  std::vector<std::string> vars_;
};

namespace expr_detail {

inline NodePtr num(double v) { return std::make_shared<const ExprNode>(ExprNode{Op::Num, v, -1, nullptr, nullptr}); }
inline NodePtr var(int s) { return std::make_shared<const ExprNode>(ExprNode{Op::Var, 0.0, s, nullptr, nullptr}); }
inline NodePtr node(Op op, NodePtr a, NodePtr b = nullptr) {
  return std::make_shared<const ExprNode>(ExprNode{op, 0.0, -1, std::move(a), std::move(b)});
}

inline bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }
inline bool is_num(const NodePtr& n) { return n->op == Op::Num; }

// constructors with constant folding; a folded value must stay finite
inline NodePtr fold_or(double v, NodePtr fallback) { return std::isfinite(v) ? num(v) : fallback; }

inline NodePtr mk_neg(NodePtr a) {
  if (is_num(a)) return num(-a->value);
  if (a->op == Op::Neg) return a->a;
  return node(Op::Neg, std::move(a));
}
inline NodePtr mk_add(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return fold_or(a->value + b->value, node(Op::Add, a, b));
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  return node(Op::Add, std::move(a), std::move(b));
}
inline NodePtr mk_sub(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return fold_or(a->value - b->value, node(Op::Sub, a, b));
  if (is_num(b, 0.0)) return a;
  if (is_num(a, 0.0)) return mk_neg(std::move(b));
  return node(Op::Sub, std::move(a), std::move(b));
}
inline NodePtr mk_mul(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return fold_or(a->value * b->value, node(Op::Mul, a, b));
  if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  if (is_num(a, -1.0)) return mk_neg(std::move(b));
  if (is_num(b, -1.0)) return mk_neg(std::move(a));
  return node(Op::Mul, std::move(a), std::move(b));
}
inline NodePtr mk_div(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b) && b->value != 0.0) return fold_or(a->value / b->value, node(Op::Div, a, b));
  if (is_num(a, 0.0)) return num(0.0);
  if (is_num(b, 1.0)) return a;
  return node(Op::Div, std::move(a), std::move(b));
}
inline NodePtr mk_pow(NodePtr a, NodePtr b) {
  if (is_num(b, 1.0)) return a;
  if (is_num(b, 0.0)) return num(1.0);
  if (is_num(a) && is_num(b) && (a->value > 0.0 || b->value == std::floor(b->value)))
    return fold_or(std::pow(a->value, b->value), node(Op::Pow, a, b));
  return node(Op::Pow, std::move(a), std::move(b));
}
inline NodePtr mk_fn(Op op, NodePtr a) {
  if (is_num(a)) {
    const double x = a->value;
    if (op == Op::Sqrt && x >= 0.0) return num(std::sqrt(x));
    if (op == Op::Exp) return fold_or(std::exp(x), node(op, a));
    if (op == Op::Log && x > 0.0) return num(std::log(x));
    if (op == Op::Sin) return num(std::sin(x));
    if (op == Op::Cos) return num(std::cos(x));
  }
  return node(op, std::move(a));
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_ws();
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) fail({"operator", "end of input"});
    return e;
  }

 private:
  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (peek() == '+') {
        ++pos_;
        lhs = node(Op::Add, lhs, parse_term());
      } else if (peek() == '-') {
        ++pos_;
        lhs = node(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (peek() == '*') {
        ++pos_;
        lhs = node(Op::Mul, lhs, parse_unary());
      } else if (peek() == '/') {
        ++pos_;
        lhs = node(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    skip_ws();
    if (peek() == '-') {
      ++pos_;
      skip_ws();
      const bool literal = is_number_start();
      NodePtr operand = parse_unary();
      if (literal && operand->op == Op::Num) return num(-operand->value);
      return node(Op::Neg, operand);
    }
    if (peek() == '+') {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      return node(Op::Pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    const char c = peek();
    if (is_number_start()) return parse_number();
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      skip_ws();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string name(src_.substr(start, pos_ - start));
      Op fn = Op::Num;
      if (name == "sqrt") fn = Op::Sqrt;
      if (name == "exp") fn = Op::Exp;
      if (name == "log") fn = Op::Log;
      if (name == "sin") fn = Op::Sin;
      if (name == "cos") fn = Op::Cos;
      if (fn != Op::Num) {
        skip_ws();
        expect('(');
        NodePtr arg = parse_expr();
        skip_ws();
        expect(')');
        return node(fn, arg);
      }
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) return var(static_cast<int>(i));
      if (name == "pi") return num(3.141592653589793);
      throw UnknownIdentifier(name);
    }
    fail({"number", "identifier", "(", "-", "+"});
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = save;
      } else {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail({"number"});
    }
    return num(v);
  }

  bool is_number_start() const {
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
    return c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]));
  }

  void expect(char c) {
    if (peek() != c) fail({std::string(1, c)});
    ++pos_;
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(std::set<std::string> expected) const {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    const std::string found = pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input";
    throw SyntaxError(line, col, std::move(expected), found);
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

inline int precedence(const ExprNode& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Num:
      return n.value < 0.0 || std::signbit(n.value) ? 3 : 5;
    default:
      return 5;
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void print_node(const ExprNode& n, const std::vector<std::string>& vars, std::string& out) {
  auto sub = [&](const NodePtr& c, int min_prec) {
    if (precedence(*c) < min_prec) {
      out += '(';
      print_node(*c, vars, out);
      out += ')';
    } else {
      print_node(*c, vars, out);
    }
  };
  switch (n.op) {
    case Op::Num:
      out += format_number(n.value);
      return;
    case Op::Var:
      out += vars[static_cast<std::size_t>(n.slot)];
      return;
    case Op::Add:
    case Op::Sub:
      sub(n.a, 1);
      out += n.op == Op::Add ? " + " : " - ";
      sub(n.b, 2);
      return;
    case Op::Mul:
    case Op::Div:
      sub(n.a, 2);
      out += n.op == Op::Mul ? "*" : "/";
      sub(n.b, 3);
      return;
    case Op::Neg:
      out += '-';
      sub(n.a, 3);
      return;
    case Op::Pow:
      sub(n.a, 5);
      out += '^';
      sub(n.b, 3);
      return;
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Sin:
    case Op::Cos:
      out += n.op == Op::Sqrt  ? "sqrt("
             : n.op == Op::Exp ? "exp("
             : n.op == Op::Log ? "log("
             : n.op == Op::Sin ? "sin("
                               : "cos(";
      print_node(*n.a, vars, out);
      out += ')';
      return;
  }
}

inline NodePtr diff_node(const NodePtr& n, int k) {
  switch (n->op) {
    case Op::Num:
      return num(0.0);
    case Op::Var:
      return num(n->slot == k ? 1.0 : 0.0);
    case Op::Add:
      return mk_add(diff_node(n->a, k), diff_node(n->b, k));
    case Op::Sub:
      return mk_sub(diff_node(n->a, k), diff_node(n->b, k));
    case Op::Neg:
      return mk_neg(diff_node(n->a, k));
    case Op::Mul:
      return mk_add(mk_mul(diff_node(n->a, k), n->b), mk_mul(n->a, diff_node(n->b, k)));
    case Op::Div: {
      NodePtr da = diff_node(n->a, k);
      NodePtr db = diff_node(n->b, k);
      return mk_sub(mk_div(da, n->b), mk_div(mk_mul(n->a, db), mk_pow(n->b, num(2.0))));
    }
    case Op::Pow: {
      NodePtr da = diff_node(n->a, k);
      NodePtr db = diff_node(n->b, k);
      if (is_num(db, 0.0)) return mk_mul(mk_mul(n->b, mk_pow(n->a, mk_sub(n->b, num(1.0)))), da);
      // a^b (b' log a + b a'/a)
      return mk_mul(n, mk_add(mk_mul(db, mk_fn(Op::Log, n->a)), mk_div(mk_mul(n->b, da), n->a)));
    }
    case Op::Sqrt:
      return mk_div(diff_node(n->a, k), mk_mul(num(2.0), n));
    case Op::Exp:
      return mk_mul(n, diff_node(n->a, k));
    case Op::Log:
      return mk_div(diff_node(n->a, k), n->a);
    case Op::Sin:
      return mk_mul(mk_fn(Op::Cos, n->a), diff_node(n->a, k));
    case Op::Cos:
      return mk_neg(mk_mul(mk_fn(Op::Sin, n->a), diff_node(n->a, k)));
  }
  return num(0.0);
}

inline NodePtr bind_node(const NodePtr& n, int slot, double v) {
  switch (n->op) {
    case Op::Num:
      return n;
    case Op::Var:
      return n->slot == slot ? num(v) : n;
    case Op::Add:
      return mk_add(bind_node(n->a, slot, v), bind_node(n->b, slot, v));
    case Op::Sub:
      return mk_sub(bind_node(n->a, slot, v), bind_node(n->b, slot, v));
    case Op::Mul:
      return mk_mul(bind_node(n->a, slot, v), bind_node(n->b, slot, v));
    case Op::Div:
      return mk_div(bind_node(n->a, slot, v), bind_node(n->b, slot, v));
    case Op::Neg:
      return mk_neg(bind_node(n->a, slot, v));
    case Op::Pow:
      return mk_pow(bind_node(n->a, slot, v), bind_node(n->b, slot, v));
    default:
      return mk_fn(n->op, bind_node(n->a, slot, v));
  }
}

inline double checked(double r, const char* what) {
  if (!std::isfinite(r)) throw DomainError(std::string("non-finite result in ") + what);
  return r;
}

inline double eval_node(const ExprNode& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Num:
      return n.value;
    case Op::Var:
      return x[static_cast<std::size_t>(n.slot)];
    case Op::Add:
      return checked(eval_node(*n.a, x) + eval_node(*n.b, x), "+");
    case Op::Sub:
      return checked(eval_node(*n.a, x) - eval_node(*n.b, x), "-");
    case Op::Mul:
      return checked(eval_node(*n.a, x) * eval_node(*n.b, x), "*");
    case Op::Div: {
      const double d = eval_node(*n.b, x);
      if (d == 0.0) throw DomainError("division by zero");
      return checked(eval_node(*n.a, x) / d, "/");
    }
    case Op::Neg:
      return -eval_node(*n.a, x);
    case Op::Pow: {
      const double a = eval_node(*n.a, x);
      const double b = eval_node(*n.b, x);
      if (a < 0.0 && b != std::floor(b)) throw DomainError("non-integer power of a negative value");
      if (a == 0.0 && b < 0.0) throw DomainError("negative power of zero");
      return checked(std::pow(a, b), "^");
    }
    case Op::Sqrt: {
      const double a = eval_node(*n.a, x);
      if (a < 0.0) throw DomainError("sqrt of a negative value");
      return std::sqrt(a);
    }
    case Op::Exp:
      return checked(std::exp(eval_node(*n.a, x)), "exp");
    case Op::Sin:
      return std::sin(eval_node(*n.a, x));
    case Op::Cos:
      return std::cos(eval_node(*n.a, x));
    case Op::Log: {
      const double a = eval_node(*n.a, x);
      if (a <= 0.0) throw DomainError("log of a non-positive value");
      return std::log(a);
    }
  }
  return 0.0;
}

inline Jet eval_node(const ExprNode& n, std::span<const Jet> x) {
  switch (n.op) {
    case Op::Num: {
      const Jet& ref = x[0];
      return Jet::constant(n.value, ref.dim(), ref.order());
    }
    case Op::Var:
      return x[static_cast<std::size_t>(n.slot)];
    case Op::Add:
      return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Op::Sub:
      return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Op::Mul:
      return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Op::Div:
      return eval_node(*n.a, x) / eval_node(*n.b, x);
    case Op::Neg:
      return -eval_node(*n.a, x);
    case Op::Pow: {
      Jet a = eval_node(*n.a, x);
      if (n.b->op == Op::Num) {
        if (a.value() == 0.0 && n.b->value < 0.0) throw DomainError("negative power of zero");
        return pow(a, n.b->value);
      }
      Jet b = eval_node(*n.b, x);
      if (a.value() <= 0.0) throw DomainError("variable power of a non-positive value");
      return exp(b * log(a));
    }
    case Op::Sqrt:
      return sqrt(eval_node(*n.a, x));
    case Op::Exp:
      return exp(eval_node(*n.a, x));
    case Op::Log:
      return log(eval_node(*n.a, x));
    case Op::Sin:
      return sin(eval_node(*n.a, x));
    case Op::Cos:
      return cos(eval_node(*n.a, x));
  }
  return Jet{};
}

}  // namespace expr_detail

/// Default identifier set: momentum coordinates p1..p4 and the parameter theta.
inline std::vector<std::string> default_expr_vars() { return {"p1", "p2", "p3", "p4", "theta"}; }

inline Expr parse_expr(std::string_view src, std::vector<std::string> vars = default_expr_vars()) {
  expr_detail::Parser parser(src, vars);
  NodePtr root = parser.parse();
  return Expr(std::move(root), std::move(vars));
}

inline std::string to_string(const Expr& e) {
  std::string out;
  expr_detail::print_node(*e.root(), e.vars(), out);
  return out;
}

/// Partial derivative with respect to the variable in slot k.
inline Expr diff_expr(const Expr& e, int k) { return Expr(expr_detail::diff_node(e.root(), k), e.vars()); }

inline Expr diff_expr(const Expr& e, std::string_view name) {
  const int k = e.slot_of(name);
  if (k < 0) throw UnknownIdentifier(std::string(name));
  return diff_expr(e, k);
}

/// Replace a variable by a constant, folding what becomes constant.
inline Expr bind(const Expr& e, std::string_view name, double value) {
  const int k = e.slot_of(name);
  if (k < 0) return e;
  return Expr(expr_detail::bind_node(e.root(), k, value), e.vars());
}

/// Evaluate with values in the slots of e.vars(); domain violations throw DomainError.
inline double eval(const Expr& e, std::span<const double> x) { return expr_detail::eval_node(*e.root(), x); }

/// Taylor-jet evaluation (exact derivatives up to the jet order).
inline Jet eval(const Expr& e, std::span<const Jet> x) { return expr_detail::eval_node(*e.root(), x); }

inline bool depends_on(const NodePtr& n, int slot) {
  if (n->op == Op::Var) return n->slot == slot;
  if (n->op == Op::Num) return false;
  return depends_on(n->a, slot) || (n->b && depends_on(n->b, slot));
}

}  // namespace kfp
