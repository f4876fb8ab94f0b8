#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <avgtori/errors.hpp>
#include <avgtori/expr.hpp>
#include <avgtori/system.hpp>

using namespace avgtori;

namespace {

double ev(const std::string& s, double t, std::vector<double> x) {
  return eval_expr(parse_expr(s, static_cast<int>(x.size())), t, x);
}

// Random well-defined expressions over t, x1..x3. Denominators are kept away
// from zero so finite differences stay meaningful.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
  std::uniform_int_distribution<int> var(1, 3);
  std::uniform_real_distribution<double> lit(-2.0, 2.0);
  switch (pick(rng)) {
    case 0: return "x" + std::to_string(var(rng));
    case 1: return "t";
    case 2: return std::to_string(std::round(lit(rng) * 100) / 100);
    case 3: return "(" + random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1) + ")";
    case 4: return "(" + random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1) + ")";
    case 5: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 6: return random_expr(rng, depth - 1) + "/(3 + cos(" + random_expr(rng, depth - 1) + "))";
    case 7: return "sin(" + random_expr(rng, depth - 1) + ")";
    case 8: return "(" + random_expr(rng, depth - 1) + ")^" + std::to_string(std::uniform_int_distribution<int>(2, 3)(rng));
    default: return "-" + random_expr(rng, depth - 1);
  }
}

}  // namespace

TEST_CASE("parse: tree shape and precedence") {
  Expr e = parse_expr("x1*cos(t) + 2", 2);
  REQUIRE(e.op() == Op::Add);
  CHECK(e.lhs().op() == Op::Mul);
  CHECK(e.lhs().lhs().op() == Op::Var);
  CHECK(e.lhs().lhs().index() == 1);
  CHECK(e.lhs().rhs().op() == Op::Cos);
  CHECK(e.lhs().rhs().lhs().op() == Op::Time);
  CHECK(e.rhs().is_literal(2.0));

  Expr m = parse_expr("-x1^2", 1);
  REQUIRE(m.op() == Op::Neg);
  CHECK(m.lhs().op() == Op::Pow);
  CHECK(eval_expr(m, 0.0, std::vector<double>{2.0}) == -4.0);

  CHECK(ev("8 - 3 - 2", 0, {}) == 3.0);
  CHECK(ev("16 / 4 / 2", 0, {}) == 2.0);
  CHECK(ev(" 2 *  ( 1+ 2 ) ", 0, {}) == 6.0);
}

TEST_CASE("parse: errors") {
  CHECK_THROWS_AS(parse_expr("x3", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("foo(x1)", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("", 2), ParseError);
  try {
    parse_expr("x1 + * 2", 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("eval: examples and non-finite guard") {
  CHECK(ev("sin(t)", 0, {}) == 0.0);
  CHECK(ev("x1^3", 0, {2}) == 8.0);
  CHECK(ev("x1*cos(t)+x2", std::numbers::pi, {3, 1}) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(ev("pi", 0, {}) == std::numbers::pi);
  CHECK_THROWS_AS(ev("1/x1", 0, {0}), NonFiniteError);
  CHECK_THROWS_AS(ev("exp(x1)", 0, {1000}), NonFiniteError);
}

TEST_CASE("diff: examples") {
  CHECK(to_string(diff_expr(parse_expr("x1^2", 1), 1)) == "2*x1");
  CHECK(diff_expr(parse_expr("sin(x1)", 2), 2).is_zero());
  Expr d = diff_expr(parse_expr("x1*cos(t)", 1), 1);
  CHECK(eval_expr(d, 0.0, std::vector<double>{0.3}) == 1.0);
  // time derivative
  Expr dt = diff_expr(parse_expr("x1*cos(t)", 1), 0);
  CHECK(eval_expr(dt, 0.5, std::vector<double>{2.0}) == doctest::Approx(-2.0 * std::sin(0.5)));
}

TEST_CASE("diff: property, matches Richardson-extrapolated central differences") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  int checked = 0;
  while (checked < 100) {
    const std::string src = random_expr(rng, 3);
    Expr e = parse_expr(src, 3);
    std::vector<double> x{pt(rng), pt(rng), pt(rng)};
    const double t = pt(rng);
    const int var = std::uniform_int_distribution<int>(1, 3)(rng);
    auto f = [&](double h) {
      auto y = x;
      y[static_cast<std::size_t>(var - 1)] += h;
      return eval_expr(e, t, y);
    };
    // 5-point central difference at h and h/2, combined once by Richardson
    auto d5 = [&](double h) { return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h); };
    const double h = 1e-3;
    const double fd = (16 * d5(h / 2) - d5(h)) / 15;
    const double exact = eval_expr(diff_expr(e, var), t, x);
    INFO(src);
    CHECK(std::abs(exact - fd) <= 1e-6 * std::max(1.0, std::abs(exact)));
    ++checked;
  }
}

TEST_CASE("print: parse . print . parse is a fixed point") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    Expr e = parse_expr(random_expr(rng, 4), 3);
    Expr back = parse_expr(to_string(e), 3);
    INFO(to_string(e));
    CHECK(back == e);
  }
}

TEST_CASE("compiled: agrees with tree evaluation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pt(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Expr e = parse_expr(random_expr(rng, 4), 3);
    std::vector<double> x{pt(rng), pt(rng), pt(rng)};
    const double t = pt(rng);
    CompiledExpr c(e);
    CHECK(c(t, x.data()) == doctest::Approx(eval_expr(e, t, x)).epsilon(1e-13));
  }
}

namespace {
SystemSpec spec_from(std::vector<std::vector<std::string>> orders, int n) {
  std::vector<std::vector<Expr>> comps;
  for (auto& o : orders) {
    std::vector<Expr> row;
    for (auto& s : o) row.push_back(parse_expr(s, n));
    comps.push_back(row);
  }
  return SystemSpec("test", n, 2 * std::numbers::pi, static_cast<int>(orders.size()), comps);
}
}  // namespace

TEST_CASE("derivative_tensor: examples") {
  auto lin = spec_from({{"x1", "x2"}, {"x1^2", "0"}}, 2);
  Eigen::Vector2d x(0.3, -0.4), d(1.5, 2.5);
  std::vector<Eigen::VectorXd> dirs{d};
  CHECK(lin.derivative_tensor(1, 1, 0.0, x, dirs).isApprox(Eigen::VectorXd(d)));
  std::vector<Eigen::VectorXd> two{d, Eigen::Vector2d(-1, 3)};
  CHECK(lin.derivative_tensor(1, 2, 0.0, x, two).isZero(0.0));
  std::vector<Eigen::VectorXd> e1e1{Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)};
  CHECK(lin.derivative_tensor(2, 2, 0.0, x, e1e1)(0) == 2.0);
  std::vector<Eigen::VectorXd> three{d, d, d};
  CHECK_THROWS_AS(lin.derivative_tensor(1, 3, 0.0, x, three), std::out_of_range);
}

TEST_CASE("derivative_tensor: property, symmetric in its directions") {
  auto s = spec_from({{"sin(x1*x2) + x3^3*cos(t)", "exp(x1)*x2^2", "x1*x2*x3"},
                      {"x1^2*x2^2*x3", "cos(x1+x3)", "x2^4"},
                      {"x1*x2*x3*sin(t)", "exp(x2+x3)", "x3^3*x1"}},
                     3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto vec = [&] { return Eigen::Vector3d(u(rng), u(rng), u(rng)); };
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x = vec();
    std::vector<Eigen::VectorXd> dirs{vec(), vec(), vec()};
    const int i = 1 + trial % 3;
    auto ref = s.derivative_tensor(i, 3, 0.3, x, dirs);
    std::vector<int> perm{0, 1, 2};
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<Eigen::VectorXd> p{dirs[static_cast<std::size_t>(perm[0])], dirs[static_cast<std::size_t>(perm[1])],
                                     dirs[static_cast<std::size_t>(perm[2])]};
      auto v = s.derivative_tensor(i, 3, 0.3, x, p);
      CHECK((v - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("system file: parse, defaults and rejections") {
  auto s = parse_system(R"J({"name":"demo","n":2,"T":"2*pi","N":2,"F":{"2":["sin(t)*x1","x2^2"]}})J");
  CHECK(s.name() == "demo");
  CHECK(s.dimension() == 2);
  CHECK(s.period() == doctest::Approx(2 * std::numbers::pi));
  CHECK(s.order_is_zero(1));
  CHECK_FALSE(s.order_is_zero(2));
  CHECK_FALSE(s.has_remainder());
  CHECK_NOTHROW(verify_periodicity(s));

  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":1,"N":1,"F":{},"extra":1})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":1,"F":{}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":-1,"N":1,"F":{}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":"x1","N":1,"F":{}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":1,"N":1,"F":{"2":["0","0"]}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":1,"N":1,"F":{"1":["x3","0"]}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,"T":1,"N":1,"F":{"1":["0"]}})J"), ParseError);
  CHECK_THROWS_AS(parse_system(R"J({"n":2,)J"), ParseError);

  auto bad = parse_system(R"J({"n":1,"T":1,"N":1,"F":{"1":["sin(t)*x1"]}})J");
  CHECK_THROWS_AS(verify_periodicity(bad), ValidityError);
}

TEST_CASE("system: field sums the orders with powers of eps") {
  auto s = parse_system(R"J({"n":1,"T":"2*pi","N":2,"F":{"1":["x1"],"2":["cos(t)"]},"remainder":["1"]})J");
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2.0);
  const double eps = 0.1;
  CHECK(s.field(eps, 0.0, x)(0) == doctest::Approx(eps * 2.0 + eps * eps * 1.0 + eps * eps * eps));
  CHECK(s.field_jacobian(eps, 0.0, x)(0, 0) == doctest::Approx(eps));
}
