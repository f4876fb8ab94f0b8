#include "avgtori/expr.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "avgtori/jet.hpp"

namespace avgtori {

namespace {

const Expr::Node& zero_node() {
  static const Expr::Node n{};
  return n;
}

}  // namespace

Expr::Expr() : node_(std::shared_ptr<const Node>(&zero_node(), [](const Node*) {})) {}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->index; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

Expr Expr::literal(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Lit;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::pi() {
  auto n = std::make_shared<Node>();
  n->op = Op::Pi;
  n->value = std::numbers::pi;
  return Expr(std::move(n));
}

Expr Expr::time() {
  auto n = std::make_shared<Node>();
  n->op = Op::Time;
  return Expr(std::move(n));
}

Expr Expr::variable(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = i;
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->index = exponent;
  n->a = std::move(base);
  return Expr(std::move(n));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Lit:
      return a.value() == b.value();
    case Op::Pi:
    case Op::Time:
      return true;
    case Op::Var:
      return a.index() == b.index();
    case Op::Pow:
      return a.index() == b.index() && a.lhs() == b.lhs();
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
      return a.lhs() == b.lhs();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

// ---------------------------------------------------------------------------
// simplifying constructors

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.op() == Op::Lit && b.op() == Op::Lit) return Expr::literal(a.value() + b.value());
  return Expr::binary(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.op() == Op::Lit && b.op() == Op::Lit) return Expr::literal(a.value() - b.value());
  return Expr::binary(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr::literal(0.0);
  if (a.is_literal(1.0)) return b;
  if (b.is_literal(1.0)) return a;
  if (a.is_literal(-1.0)) return -b;
  if (b.is_literal(-1.0)) return -a;
  if (a.op() == Op::Lit && b.op() == Op::Lit) return Expr::literal(a.value() * b.value());
  return Expr::binary(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_zero() && !b.is_zero()) return Expr::literal(0.0);
  if (b.is_literal(1.0)) return a;
  return Expr::binary(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.op() == Op::Lit) return Expr::literal(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expr::unary(Op::Neg, a);
}

Expr pow(const Expr& a, int p) {
  if (p == 0) return Expr::literal(1.0);
  if (p == 1) return a;
  if (a.is_zero() && p > 0) return Expr::literal(0.0);
  return Expr::power(a, p);
}

Expr sin(const Expr& a) {
  if (a.is_zero()) return Expr::literal(0.0);
  return Expr::unary(Op::Sin, a);
}

Expr cos(const Expr& a) {
  if (a.is_zero()) return Expr::literal(1.0);
  return Expr::unary(Op::Cos, a);
}

Expr exp(const Expr& a) {
  if (a.is_zero()) return Expr::literal(1.0);
  return Expr::unary(Op::Exp, a);
}

// ---------------------------------------------------------------------------
// parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, int n) : src_(src), n_(n) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    Expr e = sum();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (accept('+'))
        e = Expr::binary(Op::Add, e, product());
      else if (accept('-'))
        e = Expr::binary(Op::Sub, e, product());
      else
        return e;
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (accept('*'))
        e = Expr::binary(Op::Mul, e, unary());
      else if (accept('/'))
        e = Expr::binary(Op::Div, e, unary());
      else
        return e;
    }
  }

  Expr unary() {
    if (accept('-')) {
      skip_ws();
      const std::size_t save = pos_;
      if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
        const double v = number();
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != '^') return Expr::literal(-v);
        pos_ = save;
      }
      return Expr::unary(Op::Neg, unary());
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    bool negative = accept('-');
    skip_ws();
    const std::size_t digits = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (digits == pos_) throw ParseError("exponent must be an integer literal", at);
    int p = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + digits, src_.data() + pos_, p);
    if (ec != std::errc()) throw ParseError("exponent out of range", digits);
    skip_ws();
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
      throw ParseError("exponent must be an integer literal", at);
    if (pos_ < src_.size() && src_[pos_] == '^')
      throw ParseError("chained '^' is ambiguous; use parentheses", pos_);
    return Expr::power(base, negative ? -p : p);
  }

  double number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return v;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr::literal(number());
    if (c == '(') {
      ++pos_;
      Expr e = sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string_view id = src_.substr(start, pos_ - start);
      if (id == "t") return Expr::time();
      if (id == "pi") return Expr::pi();
      if (id == "sin" || id == "cos" || id == "exp") {
        if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
        Expr arg = sum();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        const Op op = id == "sin" ? Op::Sin : id == "cos" ? Op::Cos : Op::Exp;
        return Expr::unary(op, arg);
      }
      if (id.size() > 1 && id[0] == 'x') {
        int k = 0;
        auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), k);
        if (ec == std::errc() && ptr == id.data() + id.size() && k >= 1 && id[1] != '0') {
          if (k > n_)
            throw ParseError("variable index out of range: " + std::string(id) +
                                 " (dimension " + std::to_string(n_) + ")",
                             start);
          return Expr::variable(k);
        }
      }
      throw ParseError("unknown identifier '" + std::string(id) + "'", start);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string_view src_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view src, int n) { return Parser(src, n).parse(); }

// ---------------------------------------------------------------------------
// printer

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
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
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Lit:
      if (std::signbit(e.value()))
        out += "(" + format_number(e.value()) + ")";
      else
        out += format_number(e.value());
      return;
    case Op::Pi:
      out += "pi";
      return;
    case Op::Time:
      out += "t";
      return;
    case Op::Var:
      out += "x" + std::to_string(e.index());
      return;
    case Op::Neg:
      out += '-';
      // -(2) keeps a Neg node distinct from the literal -2
      print_wrapped(e.lhs(), precedence(e.lhs()) < 3 || e.lhs().op() == Op::Lit, out);
      return;
    case Op::Pow:
      print_wrapped(e.lhs(), precedence(e.lhs()) < 5, out);
      out += "^" + std::to_string(e.index());
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
      out += e.op() == Op::Sin ? "sin(" : e.op() == Op::Cos ? "cos(" : "exp(";
      print(e.lhs(), out);
      out += ')';
      return;
    default: {
      const int p = precedence(e);
      print_wrapped(e.lhs(), precedence(e.lhs()) < p, out);
      switch (e.op()) {
        case Op::Add: out += " + "; break;
        case Op::Sub: out += " - "; break;
        case Op::Mul: out += "*"; break;
        default: out += "/"; break;
      }
      print_wrapped(e.rhs(), precedence(e.rhs()) <= p, out);
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

int max_variable(const Expr& e) {
  switch (e.op()) {
    case Op::Var:
      return e.index();
    case Op::Lit:
    case Op::Pi:
    case Op::Time:
      return 0;
    case Op::Pow:
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
      return max_variable(e.lhs());
    default:
      return std::max(max_variable(e.lhs()), max_variable(e.rhs()));
  }
}

// ---------------------------------------------------------------------------
// calculus

Expr diff_expr(const Expr& e, int var) {
  switch (e.op()) {
    case Op::Lit:
    case Op::Pi:
      return Expr::literal(0.0);
    case Op::Time:
      return Expr::literal(var == 0 ? 1.0 : 0.0);
    case Op::Var:
      return Expr::literal(var == e.index() ? 1.0 : 0.0);
    case Op::Add:
      return diff_expr(e.lhs(), var) + diff_expr(e.rhs(), var);
    case Op::Sub:
      return diff_expr(e.lhs(), var) - diff_expr(e.rhs(), var);
    case Op::Mul:
      return diff_expr(e.lhs(), var) * e.rhs() + e.lhs() * diff_expr(e.rhs(), var);
    case Op::Div: {
      const Expr da = diff_expr(e.lhs(), var);
      const Expr db = diff_expr(e.rhs(), var);
      if (db.is_zero()) return da / e.rhs();
      return (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
    }
    case Op::Pow: {
      const int p = e.index();
      return Expr::literal(p) * pow(e.lhs(), p - 1) * diff_expr(e.lhs(), var);
    }
    case Op::Neg:
      return -diff_expr(e.lhs(), var);
    case Op::Sin:
      return cos(e.lhs()) * diff_expr(e.lhs(), var);
    case Op::Cos:
      return -(sin(e.lhs()) * diff_expr(e.lhs(), var));
    case Op::Exp:
      return e * diff_expr(e.lhs(), var);
  }
  return Expr::literal(0.0);
}

Expr substitute(const Expr& e, std::span<const Expr> replacements, const Expr& time_replacement) {
  switch (e.op()) {
    case Op::Lit:
    case Op::Pi:
      return e;
    case Op::Time:
      return time_replacement;
    case Op::Var:
      if (e.index() > static_cast<int>(replacements.size()))
        throw std::invalid_argument("substitute: no replacement for x" + std::to_string(e.index()));
      return replacements[static_cast<std::size_t>(e.index() - 1)];
    case Op::Pow:
      return pow(substitute(e.lhs(), replacements, time_replacement), e.index());
    case Op::Neg:
      return -substitute(e.lhs(), replacements, time_replacement);
    case Op::Sin:
      return sin(substitute(e.lhs(), replacements, time_replacement));
    case Op::Cos:
      return cos(substitute(e.lhs(), replacements, time_replacement));
    case Op::Exp:
      return exp(substitute(e.lhs(), replacements, time_replacement));
    case Op::Add:
      return substitute(e.lhs(), replacements, time_replacement) +
             substitute(e.rhs(), replacements, time_replacement);
    case Op::Sub:
      return substitute(e.lhs(), replacements, time_replacement) -
             substitute(e.rhs(), replacements, time_replacement);
    case Op::Mul:
      return substitute(e.lhs(), replacements, time_replacement) *
             substitute(e.rhs(), replacements, time_replacement);
    case Op::Div:
      return substitute(e.lhs(), replacements, time_replacement) /
             substitute(e.rhs(), replacements, time_replacement);
  }
  return e;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double constant_like(double, double v) { return v; }
Series constant_like(const Series& t, double v) { return Series(v, t.order()); }

double pow_int(double a, int p) {
  if (p < 0) return 1.0 / pow_int(a, -p);
  double r = 1.0;
  while (p > 0) {
    if (p & 1) r *= a;
    p >>= 1;
    if (p > 0) a *= a;
  }
  return r;
}

}  // namespace

template <class T>
T evaluate(const Expr& e, const T& t, std::span<const T> x) {
  using std::cos;
  using std::exp;
  using std::sin;
  switch (e.op()) {
    case Op::Lit:
    case Op::Pi:
      return constant_like(t, e.value());
    case Op::Time:
      return t;
    case Op::Var:
      return x[static_cast<std::size_t>(e.index() - 1)];
    case Op::Add:
      return evaluate(e.lhs(), t, x) + evaluate(e.rhs(), t, x);
    case Op::Sub:
      return evaluate(e.lhs(), t, x) - evaluate(e.rhs(), t, x);
    case Op::Mul:
      return evaluate(e.lhs(), t, x) * evaluate(e.rhs(), t, x);
    case Op::Div:
      return evaluate(e.lhs(), t, x) / evaluate(e.rhs(), t, x);
    case Op::Pow:
      return pow_int(evaluate(e.lhs(), t, x), e.index());
    case Op::Neg:
      return -evaluate(e.lhs(), t, x);
    case Op::Sin:
      return sin(evaluate(e.lhs(), t, x));
    case Op::Cos:
      return cos(evaluate(e.lhs(), t, x));
    case Op::Exp:
      return exp(evaluate(e.lhs(), t, x));
  }
  return constant_like(t, 0.0);
}

template double evaluate<double>(const Expr&, const double&, std::span<const double>);
template Series evaluate<Series>(const Expr&, const Series&, std::span<const Series>);

namespace {

double eval_checked(const Expr& e, double t, std::span<const double> x) {
  switch (e.op()) {
    case Op::Div: {
      const double den = eval_checked(e.rhs(), t, x);
      if (den == 0.0) throw NonFiniteError("division by zero");
      return eval_checked(e.lhs(), t, x) / den;
    }
    case Op::Pow:
      if (e.index() < 0 && eval_checked(e.lhs(), t, x) == 0.0)
        throw NonFiniteError("division by zero (negative power of zero)");
      return pow_int(eval_checked(e.lhs(), t, x), e.index());
    case Op::Add:
      return eval_checked(e.lhs(), t, x) + eval_checked(e.rhs(), t, x);
    case Op::Sub:
      return eval_checked(e.lhs(), t, x) - eval_checked(e.rhs(), t, x);
    case Op::Mul:
      return eval_checked(e.lhs(), t, x) * eval_checked(e.rhs(), t, x);
    case Op::Neg:
      return -eval_checked(e.lhs(), t, x);
    case Op::Sin:
      return std::sin(eval_checked(e.lhs(), t, x));
    case Op::Cos:
      return std::cos(eval_checked(e.lhs(), t, x));
    case Op::Exp:
      return std::exp(eval_checked(e.lhs(), t, x));
    default:
      return evaluate<double>(e, t, x);
  }
}

}  // namespace

double eval_expr(const Expr& e, double t, std::span<const double> x) {
  if (max_variable(e) > static_cast<int>(x.size()))
    throw std::invalid_argument("eval_expr: state vector shorter than referenced variables");
  const double v = eval_checked(e, t, x);
  if (!std::isfinite(v)) throw NonFiniteError("expression evaluated to a non-finite value");
  return v;
}

// ---------------------------------------------------------------------------
// compiled form

namespace {

void emit(const Expr& e, std::vector<std::pair<Op, std::pair<int, double>>>& code, std::size_t& depth,
          std::size_t& max_depth) {
  auto push = [&] { max_depth = std::max(max_depth, ++depth); };
  switch (e.op()) {
    case Op::Lit:
    case Op::Pi:
      code.push_back({Op::Lit, {0, e.value()}});
      push();
      return;
    case Op::Time:
      code.push_back({Op::Time, {0, 0.0}});
      push();
      return;
    case Op::Var:
      code.push_back({Op::Var, {e.index() - 1, 0.0}});
      push();
      return;
    case Op::Pow:
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
      emit(e.lhs(), code, depth, max_depth);
      code.push_back({e.op(), {e.index(), 0.0}});
      return;
    default:
      emit(e.lhs(), code, depth, max_depth);
      emit(e.rhs(), code, depth, max_depth);
      code.push_back({e.op(), {0, 0.0}});
      --depth;
  }
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) : zero_(e.is_zero()) {
  std::vector<std::pair<Op, std::pair<int, double>>> raw;
  std::size_t depth = 0;
  emit(e, raw, depth, depth_);
  code_.reserve(raw.size());
  for (const auto& [op, arg] : raw) code_.push_back({op, arg.first, arg.second});
}

double CompiledExpr::operator()(double t, const double* x) const {
  if (zero_) return 0.0;
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline] = {};
  std::vector<double> heap;
  double* st = inline_stack;
  if (depth_ > kInline) {
    heap.resize(depth_);
    st = heap.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Lit: st[sp++] = in.value; break;
      case Op::Time: st[sp++] = t; break;
      case Op::Var: st[sp++] = x[in.index]; break;
      case Op::Add: --sp; st[sp - 1] += st[sp]; break;
      case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
      case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
      case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
      case Op::Pow: st[sp - 1] = pow_int(st[sp - 1], in.index); break;
      case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
      case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
      case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
      case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
      default: break;
    }
  }
  return st[0];
}

}  // namespace avgtori
