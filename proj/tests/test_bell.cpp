#include <doctest.h>

#include <random>
#include <stdexcept>

#include <avgtori/bell.hpp>
#include <avgtori/jet.hpp>

#include "oracles.hpp"

using namespace avgtori;
using avgtori::bell::bell_eval;

TEST_CASE("bell: hand examples") {
  std::vector<std::int64_t> x1{7};
  CHECK(bell_eval(1, 1, std::span<const std::int64_t>(x1)) == 7);
  for (int n = 1; n <= 8; ++n) {
    std::int64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    std::vector<std::int64_t> x{3};
    CHECK(bell_eval(n, n, std::span<const std::int64_t>(x)) == p);
  }
  std::vector<double> a{2.0, 5.0};
  CHECK(bell_eval(3, 2, std::span<const double>(a)) == doctest::Approx(30.0));
  std::vector<double> b{2.0, 5.0, 7.0};
  CHECK(bell_eval(4, 2, std::span<const double>(b)) == doctest::Approx(4 * 2 * 7 + 3 * 25));
}

TEST_CASE("bell: argument errors") {
  std::vector<std::int64_t> two{1, 1};
  CHECK_THROWS_AS(bell_eval(2, 5, std::span<const std::int64_t>(two)), std::invalid_argument);
  CHECK_THROWS_AS(bell_eval(3, 1, std::span<const std::int64_t>(two)), std::invalid_argument);
  CHECK_THROWS_AS(bell_eval(0, 0, std::span<const std::int64_t>(two)), std::invalid_argument);
}

TEST_CASE("bell: table boundary values and positive coefficients") {
  const auto& t = bell::shared_table();
  CHECK(t.terms(0, 0).size() == 1);
  CHECK(t.terms(0, 0).front().coeff == 1);
  for (int n = 1; n <= 8; ++n) {
    CHECK(t.terms(n, 0).empty());
    CHECK(t.terms(0, n).empty());
    for (int k = 1; k <= n; ++k)
      for (const auto& term : t.terms(n, k)) {
        CHECK(term.coeff > 0);
        CHECK(static_cast<int>(term.indices.size()) == k);
        for (int idx : term.indices) CHECK(idx <= n - k + 1);
      }
  }
}

TEST_CASE("bell: property, equals set-partition enumeration") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial)
    for (int n = 1; n <= 8; ++n)
      for (int k = 1; k <= n; ++k) {
        auto x = oracle::random_ints(rng, n - k + 1, -3, 3);
        REQUIRE(bell_eval(n, k, std::span<const std::int64_t>(x)) == oracle::bell_by_partitions(n, k, x));
      }
}

TEST_CASE("bell: row sums at ones are Bell numbers") {
  for (int n = 1; n <= 8; ++n) {
    std::int64_t sum = 0;
    for (int k = 1; k <= n; ++k) {
      std::vector<std::int64_t> ones(static_cast<std::size_t>(n - k + 1), 1);
      sum += bell_eval(n, k, std::span<const std::int64_t>(ones));
    }
    CHECK(sum == oracle::bell_number(n));
  }
}

TEST_CASE("bell: vector arguments act componentwise") {
  std::vector<Eigen::VectorXd> x{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, -1.0)};
  Eigen::VectorXd v = bell_eval(3, 2, std::span<const Eigen::VectorXd>(x));
  CHECK(v(0) == doctest::Approx(9.0));
  CHECK(v(1) == doctest::Approx(-6.0));
}

namespace {
EpsJet scalar_jet(std::vector<double> c) {
  std::vector<Eigen::VectorXd> v;
  for (double d : c) v.push_back(Eigen::VectorXd::Constant(1, d));
  return EpsJet(v);
}
std::vector<double> coeffs(const EpsJet& j) {
  std::vector<double> c;
  for (const auto& v : j.coeffs()) c.push_back(v(0));
  return c;
}
}  // namespace

TEST_CASE("jet: multiplication examples") {
  CHECK(coeffs(jet_mul(scalar_jet({1, 1, 0}), scalar_jet({1, -1, 0}))) == std::vector<double>{1, 0, -1});
  CHECK(coeffs(jet_mul(scalar_jet({1, 1, 1}), scalar_jet({1, 1, 0}))) == std::vector<double>{1, 2, 2});
  auto x = scalar_jet({3, -2, 5});
  CHECK(coeffs(jet_mul(x, EpsJet::constant(Eigen::VectorXd::Ones(1), 2))) == coeffs(x));
  CHECK_THROWS_AS(jet_mul(scalar_jet({1, 1}), scalar_jet({1, 1, 1})), std::invalid_argument);
}

TEST_CASE("jet: extract") {
  Eigen::Vector3d v(1, 2, 3);
  auto c = EpsJet::constant(v, 3);
  CHECK(jet_extract(c, 0) == Eigen::VectorXd(v));
  for (int k = 1; k <= 3; ++k) CHECK(jet_extract(c, k).isZero(0.0));
  CHECK(jet_extract(scalar_jet({1, 2}), 1)(0) == 2.0);
  CHECK_THROWS_AS(jet_extract(c, 4), std::out_of_range);
  CHECK_THROWS_AS(jet_extract(c, -1), std::out_of_range);
}

TEST_CASE("jet: property, commutative and associative") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> ints(-5, 5);
  std::uniform_real_distribution<double> reals(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int order = 1 + trial % 8;
    const bool integer = trial % 2 == 0;
    auto gen = [&] {
      std::vector<Eigen::VectorXd> c;
      for (int i = 0; i <= order; ++i) {
        Eigen::VectorXd v(3);
        for (int j = 0; j < 3; ++j) v(j) = integer ? ints(rng) : reals(rng);
        c.push_back(v);
      }
      return EpsJet(c);
    };
    auto a = gen(), b = gen(), c = gen();
    auto ab = jet_mul(a, b), ba = jet_mul(b, a);
    auto l = jet_mul(ab, c), r = jet_mul(a, jet_mul(b, c));
    REQUIRE(ab.order() == order);
    for (int i = 0; i <= order; ++i) {
      if (integer) {
        CHECK(ab.extract(i) == ba.extract(i));
        CHECK(l.extract(i) == r.extract(i));
      } else {
        const double scale = std::max(1.0, l.extract(i).cwiseAbs().maxCoeff());
        CHECK((ab.extract(i) - ba.extract(i)).cwiseAbs().maxCoeff() <= 1e-14 * scale);
        CHECK((l.extract(i) - r.extract(i)).cwiseAbs().maxCoeff() <= 1e-14 * scale);
      }
    }
  }
}

TEST_CASE("series: elementary functions agree with their Taylor expansions") {
  // sin(a + eps) = sin a + eps cos a - eps^2 sin a / 2 - eps^3 cos a / 6
  const double a = 0.7;
  Series s(std::vector<double>{a, 1.0, 0.0, 0.0});
  auto sn = sin(s), cs = cos(s), ex = exp(s);
  CHECK(sn[0] == doctest::Approx(std::sin(a)));
  CHECK(sn[1] == doctest::Approx(std::cos(a)));
  CHECK(sn[2] == doctest::Approx(-std::sin(a) / 2));
  CHECK(sn[3] == doctest::Approx(-std::cos(a) / 6));
  CHECK(cs[3] == doctest::Approx(std::sin(a) / 6));
  CHECK(ex[3] == doctest::Approx(std::exp(a) / 6));
  auto q = Series(std::vector<double>{1.0, 1.0, 0.0, 0.0});
  auto inv = Series(1.0, 3) / q;  // 1/(1+eps) = 1 - eps + eps^2 - eps^3
  CHECK(inv.coeffs() == std::vector<double>{1, -1, 1, -1});
  auto p = pow_int(q, 3);
  CHECK(p.coeffs() == std::vector<double>{1, 3, 3, 1});
}
