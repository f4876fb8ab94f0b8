#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <avgtori/errors.hpp>
#include <avgtori/example4d.hpp>
#include <avgtori/melnikov.hpp>
#include <avgtori/system.hpp>

#include "fixtures.hpp"

using namespace avgtori;

namespace {
constexpr double kPi = std::numbers::pi;

// Periodic trapezoid rule; spectrally accurate for smooth T-periodic integrands.
Eigen::VectorXd trapezoid_f1(const SystemSpec& s, const Eigen::VectorXd& z, int m = 2048) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.dimension());
  for (int j = 0; j < m; ++j) acc += s.eval_order(1, s.period() * j / m, z);
  return acc * s.period() / m;
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
  return (a - b).norm() / std::max(floor, b.norm());
}
}  // namespace

TEST_CASE("y_function: order one examples") {
  auto s = parse_system(R"J({"n":2,"T":"2*pi","N":1,"F":{"1":["sin(t)","0"]}})J");
  Eigen::Vector2d z(0.3, 0.4);
  CHECK(y_function(s, 1, 2 * kPi, z).norm() < 1e-12);
  CHECK(y_function(s, 1, kPi, z)(0) == doctest::Approx(2.0).epsilon(1e-10));
  auto s2 = parse_system(R"J({"n":2,"T":"2*pi","N":1,"F":{"1":["sin(t)^2","0"]}})J");
  auto y = y_function(s2, 1, 2 * kPi, z);
  CHECK(y(0) == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(y(1) == 0.0);
  CHECK_THROWS(y_function(s2, 2, 1.0, z));
  CHECK_THROWS(y_function(s2, 1, -1.0, z));
}

TEST_CASE("melnikov_f: order one equals direct quadrature, scaling covariance") {
  auto s = parse_system(fixture::kTrig2d);
  auto s3 = parse_system(R"J({"n":2,"T":"2*pi","N":1,"F":{"1":[
      "3*(0.7*sin(t)*x1 + 0.4*cos(t)*x2^2 - 0.2*x2)", "3*(0.5*cos(2*t)*x1*x2 + 0.3*x2 + 0.1)"]}})J");
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    Eigen::Vector2d z(u(rng), u(rng));
    auto f1 = melnikov_f(s, 1, z);
    CHECK((f1 - trapezoid_f1(s, z)).norm() < 1e-10);
    CHECK((melnikov_f(s3, 1, z) - 3.0 * f1).norm() < 1e-10);
  }
}

TEST_CASE("jet_oracle_f: closed form of z' = eps z") {
  auto s = parse_system(R"J({"n":1,"T":1,"N":1,"F":{"1":["x1"]}})J");
  Eigen::VectorXd z = Eigen::VectorXd::Ones(1);
  CHECK(jet_oracle_f(s, 1, z)(0) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(melnikov_f(s, 1, z)(0) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("melnikov_f: recursion agrees with the jet oracle on a trigonometric system") {
  auto s = parse_system(fixture::kTrig2d);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    Eigen::Vector2d z(u(rng), u(rng));
    auto all = melnikov_all(s, 3, z);
    REQUIRE(all.size() == 3);
    for (int i = 1; i <= 3; ++i) {
      auto jet = jet_oracle_f(s, i, z);
      CHECK(rel(all[static_cast<std::size_t>(i - 1)], jet) <= 1e-5);
      CHECK((melnikov_f(s, i, z) - all[static_cast<std::size_t>(i - 1)]).norm() < 1e-12);
    }
  }
}

TEST_CASE("melnikov_f: four-dimensional example in cylindrical form") {
  example4d::Model model(example4d::Config::standard(2, 1));
  const auto& s = model.cylindrical_spec();
  Eigen::Vector3d z(1.2, 0.3, -0.4);
  CHECK(y_function(s, 1, 1.0, z).norm() == 0.0);
  CHECK(melnikov_f(s, 2, z).norm() < 1e-8);
  auto f3 = melnikov_f(s, 3, z);
  CHECK(rel(jet_oracle_f(s, 2, z), Eigen::Vector3d::Zero(), 1.0) < 1e-8);
  CHECK(rel(f3, jet_oracle_f(s, 3, z)) < 1e-5);
}

TEST_CASE("averaged_g: admissibility guard") {
  auto s = parse_system(fixture::kTrig2d);
  Eigen::Vector2d z(0.2, 0.1);
  CHECK((averaged_g(s, 1, z) - melnikov_f(s, 1, z) / (2 * kPi)).norm() < 1e-14);
  CHECK_THROWS_AS(averaged_g(s, 2, z), HypothesisError);
  CHECK(leading_zero_orders(s) == 0);

  example4d::Model model(example4d::Config::standard(2, -1));
  const auto& c = model.cylindrical_spec();
  CHECK(leading_zero_orders(c) == 1);
  AveragedField g(c, 3);
  Eigen::Vector3d p(0.9, 0.5, 0.2);
  CHECK((g(p) - melnikov_f(c, 3, p) / (2 * kPi)).norm() < 1e-14);
  auto field = g.autonomous();
  CHECK((field(p) - g(p)).norm() < 1e-10);
  // Jacobian of the autonomous form against central differences of g
  Eigen::MatrixXd jac = field.jacobian_at(p);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d h = Eigen::Vector3d::Zero();
    h(k) = 1e-6;
    CHECK(((g(p + h) - g(p - h)) / 2e-6 - jac.col(k)).norm() < 1e-7);
  }
}
