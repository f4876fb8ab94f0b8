#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avgtori/errors.hpp"

namespace avgtori {

enum class Op : std::uint8_t { Lit, Pi, Time, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

/// Immutable expression tree over t, x1..xn. Nodes are shared, so copies are cheap
/// and trees can be used from several threads at once.
class Expr {
 public:
  struct Node;

  Expr();  // literal 0

  Op op() const;
  double value() const;     // Lit
  int index() const;        // Var: 1-based variable index; Pow: integer exponent
  const Expr& lhs() const;  // first operand (unary ops use lhs)
  const Expr& rhs() const;

  bool is_literal(double v) const { return op() == Op::Lit && value() == v; }
  bool is_zero() const { return is_literal(0.0); }

  // Raw constructors; the parser uses these so the tree mirrors the source.
  static Expr literal(double v);
  static Expr pi();
  static Expr time();
  static Expr variable(int i);
  static Expr binary(Op op, Expr a, Expr b);
  static Expr unary(Op op, Expr a);
  static Expr power(Expr base, int exponent);

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  struct Empty {};
  explicit Expr(Empty) {}  // null handle for leaf children
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op = Op::Lit;
  double value = 0.0;
  int index = 0;
  Expr a{Empty{}}, b{Empty{}};
};

// Simplifying constructors (0*a -> 0, 1*a -> a, a+0 -> a, literal folding).
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int p);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);

/// Grammar, loosest to tightest binding:
///   sum   := prod (('+'|'-') prod)*
///   prod  := unary (('*'|'/') unary)*
///   unary := '-' unary | power
///   power := atom ['^' ['-'] integer]
///   atom  := number | 't' | 'pi' | 'x'k | fn '(' sum ')' | '(' sum ')'
/// with fn in {sin, cos, exp}. A minus sign directly in front of a number
/// literal (and not followed by '^') is folded into the literal.
Expr parse_expr(std::string_view src, int n);

/// Pretty printer; parse_expr(to_string(e)) reproduces e exactly.
std::string to_string(const Expr& e);

/// Highest variable index referenced (0 when only t / constants appear).
int max_variable(const Expr& e);

/// Symbolic derivative; var = 0 means t, var = k means x_k.
Expr diff_expr(const Expr& e, int var);

/// Replace x_k by replacements[k-1] and t by `time_replacement`.
Expr substitute(const Expr& e, std::span<const Expr> replacements, const Expr& time_replacement);

/// Generic tree evaluation. T needs construction from double, + - * /, unary -,
/// and free functions sin, cos, exp, pow_int.
template <class T>
T evaluate(const Expr& e, const T& t, std::span<const T> x);

/// IEEE double evaluation; throws NonFiniteError on division by zero or a
/// non-finite result.
double eval_expr(const Expr& e, double t, std::span<const double> x);

/// Flattened postfix form of an expression for fast repeated evaluation.
/// Division by zero is not trapped here; callers check results for finiteness.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);
  double operator()(double t, const double* x) const;
  bool is_zero() const { return zero_; }

 private:
  struct Instr {
    Op op;
    int index;
    double value;
  };
  std::vector<Instr> code_;
  std::size_t depth_ = 0;
  bool zero_ = true;
};

}  // namespace avgtori
