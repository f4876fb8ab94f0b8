#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <avgtori/errors.hpp>
#include <avgtori/example4d.hpp>
#include <avgtori/melnikov.hpp>

using namespace avgtori;
using namespace avgtori::example4d;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("config: validation") {
  CHECK_NOTHROW(Config::standard(2, 1).validate());
  CHECK_NOTHROW(Config::standard(3, -1).validate());
  CHECK(average_defect(Config::standard(2, 1)) <= 1e-10);
  CHECK_THROWS_AS(Config::standard(1, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Config::standard(2, 2).validate(), std::invalid_argument);
  auto bad = Config::standard(2, 1);
  bad.f[2] = parse_expr("x1^2", 4);  // x^2 averages to r^2 / 2
  CHECK_THROWS_AS(bad.validate(), HypothesisError);
  CHECK_THROWS_AS(Model{bad}, HypothesisError);
  auto timed = Config::standard(2, 1);
  timed.h[0] = parse_expr("sin(t)", 4);
  CHECK_THROWS_AS(timed.validate(), std::invalid_argument);
}

TEST_CASE("cartesian_field: examples") {
  Model m(Config::standard(2, 1));
  CHECK(m.cartesian_field(0.0, Eigen::Vector4d(1, 0, 0, 0)).isApprox(Eigen::Vector4d(0, 1, 0, 0)));
  CHECK(m.cartesian_field(0.0, Eigen::Vector4d(0, 1, 0.5, 0.5)).isApprox(Eigen::Vector4d(-1, 0, 0, 0)));
  for (int mu : {1, -1}) {
    Config c = Config::standard(2, mu);
    for (auto& e : c.f) e = Expr::literal(0.0);
    Model z(c);
    CHECK(z.cartesian_field(1.0, Eigen::Vector4d(1, 0, 1, 0))(0) == doctest::Approx(mu));
  }
}

TEST_CASE("cylindrical_field: examples and guard") {
  Model m(Config::standard(2, 1));
  CHECK(m.cylindrical_field(0.0, 0.7, Eigen::Vector3d(1.1, 0.2, 0.3)).norm() == 0.0);
  for (int mu : {1, -1}) {
    Model mm(Config::standard(2, mu));
    CHECK(mm.coefficient(3, 0.0, Eigen::Vector3d(1.0, 0.4, -0.2))(0) == doctest::Approx(mu));
    // theta-average of R_{N+1} is mu r^3 (1 - r^2) / 2
    const double r = 1.3;
    double avg = 0;
    for (int j = 0; j < 256; ++j) avg += mm.coefficient(3, 2 * kPi * j / 256, Eigen::Vector3d(r, 0.1, 0.2))(0) / 256;
    CHECK(avg == doctest::Approx(mu * r * r * r * (1 - r * r) / 2).epsilon(1e-12));
  }
  CHECK_THROWS_AS(m.cylindrical_field(0.9, 0.3, Eigen::Vector3d(2.0, 3.0, 3.0)), ValidityError);
  CHECK_THROWS_AS(m.cylindrical_field(0.1, 0.3, Eigen::Vector3d(0.0, 0.0, 0.0)), ValidityError);
}

TEST_CASE("eps guard on the map factories") {
  auto model = std::make_shared<const Model>(Config::standard(2, 1));
  CHECK(model->theta_deviation(0.0) < 1e-15);
  CHECK(model->theta_deviation(1.0 / 15) < 0.1);
  CHECK_NOTHROW(model->check_eps(1.0 / 15));
  CHECK_THROWS_AS(model->check_eps(0.9), ValidityError);
  CHECK_THROWS_AS(cylindrical_map(model, 0.9), ValidityError);
  CHECK_THROWS_AS(cartesian_map(model, 0.9), ValidityError);
}

TEST_CASE("guiding_field: examples") {
  CHECK((guiding_field(1, Eigen::Vector3d(1, 1, 0)) - Eigen::Vector3d(0, 0, -1 / (4 * kPi))).norm() < 1e-15);
  CHECK(guiding_field(-1, Eigen::Vector3d(0, 0.3, 0.2)).norm() == 0.0);
  CHECK(guiding_field(1, Eigen::Vector3d(1, 0, 0)).norm() == 0.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d z(1.0, u(rng), u(rng));
    CHECK(guiding_field(1, z)(0) == 0.0);
    CHECK(guiding_field(-1, z)(0) == 0.0);
    // Jacobian and divergence against central differences
    Eigen::Vector3d p(0.5 + std::abs(u(rng)), u(rng), u(rng));
    Eigen::Matrix3d j = guiding_jacobian(1, p);
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d h = Eigen::Vector3d::Unit(c) * 1e-6;
      CHECK(((guiding_field(1, p + h) - guiding_field(1, p - h)) / 2e-6 - j.col(c)).norm() < 1e-7);
    }
    CHECK(guiding_divergence(1, p) == doctest::Approx(j.trace()).epsilon(1e-12));
  }
  // the closed form over 2 pi is the displayed guiding field
  Eigen::Vector3d z(0.8, 0.3, -0.6);
  CHECK((melnikov_closed_form(1, z) / (2 * kPi) - guiding_field(1, z)).norm() < 1e-15);
}

TEST_CASE("melnikov: order N+1 is 2 pi times the displayed closed form") {
  // The displayed formula is the theta-average of F_{N+1}; the integral over
  // one period is 2 pi times that.
  Model m(Config::standard(2, 1));
  Eigen::Vector3d z(1.1, 0.4, -0.7);
  auto f3 = melnikov_f(m.cylindrical_spec(), 3, z);
  CHECK((f3 - 2 * kPi * melnikov_closed_form(1, z)).norm() <= 1e-9 * f3.norm());
}

TEST_CASE("sections: Cartesian and cylindrical maps agree after one return") {
  auto model = std::make_shared<const Model>(Config::standard(2, 1));
  auto cart = cartesian_map(model, 1.0 / 15);
  auto cyl = cylindrical_map(model, 1.0 / 15);
  for (Eigen::Vector3d s : {Eigen::Vector3d(1.01, 2, 0), Eigen::Vector3d(0.99, 0.5, 0), Eigen::Vector3d(1.2, -0.3, 0.8)}) {
    Eigen::VectorXd a = cart(s), b = cyl(s);
    CHECK((a - b).norm() <= 1e-6);
  }
}

TEST_CASE("sections: guiding trace lies on the unit circle") {
  auto tr = guiding_section_trace(64);
  REQUIRE(tr.size() == 64);
  for (const auto& p : tr) {
    CHECK(p(0) == 1.0);
    CHECK(p.tail(2).norm() == doctest::Approx(1.0).epsilon(1e-15));
  }
}
