#include <doctest.h>

#include <cmath>
#include <numbers>

#include <avgtori/errors.hpp>
#include <avgtori/example4d.hpp>
#include <avgtori/toruslab.hpp>

#include "fixtures.hpp"

using namespace avgtori;

namespace {
constexpr double kPi = std::numbers::pi;

// Rigid rotation by alpha on the unit circle with radial contraction by `k`,
// optionally in a tilted plane of R^3 so the fit has to find the plane.
SectionMap circle_map(double alpha, double k, bool tilted = false) {
  const int d = tilted ? 3 : 2;
  return SectionMap("circle", d, 0.0, [=](const Eigen::VectorXd& x) {
    Eigen::Vector2d p = x.head(2);
    const double r = p.norm(), th = std::atan2(p(1), p(0)) + 2 * kPi * alpha;
    const double r2 = 1 + k * (r - 1);
    Eigen::VectorXd y(d);
    y.head(2) << r2 * std::cos(th), r2 * std::sin(th);
    if (tilted) y(2) = 0.3 * y(0) + k * (x(2) - 0.3 * x(0));
    return y;
  });
}
}  // namespace

TEST_CASE("poincare_iterate: linear contraction converges geometrically") {
  SectionMap lin("lin", 2, 0.0, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(0.5 * x); });
  auto orb = poincare_iterate(lin, Eigen::Vector2d(1, -2), 20);
  REQUIRE(orb.size() == 20);
  for (size_t i = 0; i < orb.size(); ++i)
    CHECK((orb[i] - std::ldexp(1.0, -static_cast<int>(i) - 1) * Eigen::Vector2d(1, -2)).norm() == 0.0);
  SectionMap bad("bad", 1, 0.0, [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x(0) > 4) throw BlowUpError("too big", 0.0);
    return 2 * x;
  });
  try {
    poincare_iterate(bad, Eigen::VectorXd::Ones(1), 10);
    FAIL("expected an escape");
  } catch (const EscapeError& e) {
    CHECK(e.iterate() == 4);
  }
}

TEST_CASE("stroboscopic map: identity at eps = 0, determinism in fixed-step mode") {
  auto spec = std::make_shared<const SystemSpec>(parse_system(fixture::kPlanarAveraging));
  auto id = stroboscopic_map(spec, 0.0, IntegratorConfig::adaptive());
  Eigen::Vector2d x(0.3, -0.8);
  CHECK(id(x) == Eigen::VectorXd(x));
  auto a = stroboscopic_map(spec, 0.05, IntegratorConfig::fixed(2 * kPi / 200));
  auto b = stroboscopic_map(spec, 0.05, IntegratorConfig::fixed(2 * kPi / 200));
  auto oa = poincare_iterate(a, x, 50), ob = poincare_iterate(b, x, 50);
  for (size_t i = 0; i < oa.size(); ++i) CHECK((oa[i].array() == ob[i].array()).all());
}

TEST_CASE("closed curve: geometry of an exact circle") {
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(2, 5);
  coeffs(0, 1) = 2.0;  // 2 cos phi
  coeffs(1, 2) = 2.0;  // 2 sin phi
  ClosedCurve c(Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), coeffs);
  CHECK(c.angularly_ordered());
  CHECK(c.distance(Eigen::Vector2d(3, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  double phi = 0;
  CHECK(c.distance(Eigen::Vector2d(0, -1), &phi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(phi == doctest::Approx(1.5 * kPi).epsilon(1e-8));
  CHECK(c.angle_of(Eigen::Vector2d(-1, 0)) == doctest::Approx(kPi));
  CHECK(c.derivative(0.0).isApprox(Eigen::Vector2d(0, 2)));
  auto s = c.sample(8);
  CHECK(hausdorff(s, s) == 0.0);
  std::vector<Eigen::VectorXd> shifted;
  for (const auto& p : s) shifted.push_back(p * 1.5);
  CHECK(hausdorff(s, shifted) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("detect_torus and rotation_number: synthetic ground truth") {
  for (bool tilted : {false, true}) {
    auto map = circle_map(0.1234, 0.5, tilted);
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(map.dim()), s2 = s1;
    s1(0) = 1.3;
    s2(0) = 0.6;
    s2(1) = 0.1;
    auto est = detect_torus(map, {s1, s2}, 100, 2000);
    INFO("tilted = " << tilted);
    CHECK(est.invariance_residual <= 1e-8);
    CHECK(est.seeds_used == 2);
    for (const auto& p : est.curve.sample(64)) CHECK(p.head(2).norm() == doctest::Approx(1.0).epsilon(1e-8));
    auto r = rotation_number(map, est, 5000);
    CHECK(std::abs(r.rho - 0.1234) <= 1e-6);
    CHECK(est.rotation_number == r.rho);
    auto t = rotation_over_turns(map, est, 3.0, 100000);
    CHECK(std::abs(t.rho - 0.1234) <= 1e-6);
  }
  // the curve is oriented along the motion, so a clockwise rotation by 0.2
  // also reads as 0.2
  auto back = circle_map(-0.2, 0.5);
  auto est = detect_torus(back, {Eigen::Vector2d(1.2, 0.0)}, 50, 1000);
  CHECK(rotation_number(back, est, 2000).rho == doctest::Approx(0.2).epsilon(1e-9));
  // half a turn per step cannot be unwrapped
  auto half = circle_map(0.5, 0.5);
  auto eh = detect_torus(half, {Eigen::Vector2d(1.0, 0.001), Eigen::Vector2d(0.0, 1.2)}, 50, 2000);
  CHECK_THROWS_AS(rotation_number(half, eh, 2000), SolverError);
}

TEST_CASE("detect_torus: failures") {
  SectionMap esc("esc", 2, 0.0, [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x.norm() > 10) throw BlowUpError("escaped", 0.0);
    return 2 * x;
  });
  CHECK_THROWS_AS(detect_torus(esc, {Eigen::Vector2d(1, 0)}, 10, 100), DetectionError);
  // a figure-eight orbit is not angularly ordered around its centre
  SectionMap eight("eight", 2, 0.0, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x); });
  std::vector<std::vector<Eigen::VectorXd>> pts(1);
  for (int i = 0; i < 4000; ++i) {
    const double s = 2 * kPi * i / 4000.0;
    pts[0].push_back(Eigen::Vector2d(std::sin(s), std::sin(s) * std::cos(s)));
  }
  CHECK_THROWS_AS(fit_torus(eight, pts), DetectionError);
}

TEST_CASE("stability_probe: synthetic contracting and repelling maps") {
  auto map = circle_map(0.1234, 0.5);
  auto est = detect_torus(map, {Eigen::Vector2d(1.3, 0)}, 100, 2000);
  auto rep = stability_probe(map, est, 0.1, 50, 100, 7);
  CHECK(rep.fraction_attracted == 1.0);
  CHECK(rep.classification == "attracting");
  CHECK(rep.rng_seed == 7u);
  auto again = stability_probe(map, est, 0.1, 50, 100, 7);
  CHECK(again.fraction_attracted == rep.fraction_attracted);

  // in R^3 both normal directions expand
  auto in3 = circle_map(0.1234, 0.5, true);
  auto est3 = detect_torus(in3, {Eigen::Vector3d(1.3, 0, 0.2)}, 100, 2000);
  auto out = circle_map(0.1234, 1.5, true);
  auto rep2 = stability_probe(out, est3, 0.1, 50, 100, 7);
  CHECK(rep2.fraction_escaped == 1.0);
  CHECK(rep2.classification == "repelling");
}

TEST_CASE("averaging_closeness: zero at eps = 0 and first-order scaling") {
  auto spec = parse_system(fixture::kPlanarAveraging);
  Eigen::Vector2d z0(0.5, 0.2);
  auto rows = averaging_closeness(spec, 1, z0, {0.0, 0.1, 0.05});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].max_deviation == 0.0);
  CHECK(rows[1].horizon == doctest::Approx(10.0));
  const double ratio = rows[2].max_deviation / rows[1].max_deviation;
  CHECK(ratio >= 0.3);
  CHECK(ratio <= 0.7);
}

TEST_CASE("four-dimensional example: seeds converge to one invariant curve") {
  // Uniqueness surrogate. Once the transients have decayed both the fits and
  // the invariance residual sit at the integration noise floor, so the
  // pairwise distances are compared with the fit's own tube as well.
  const double eps = 1.0 / 15, e3 = eps * eps * eps;
  auto model = std::make_shared<const example4d::Model>(example4d::Config::standard(2, 1));
  auto map = example4d::cylindrical_map(model, eps);
  TorusOptions o;
  o.reference = example4d::guiding_section_trace();
  std::vector<TorusEstimate> fits;
  double scale = 0;
  for (Eigen::Vector3d s : {Eigen::Vector3d(1.01, 2, 0), Eigen::Vector3d(0.99, 2, 0), Eigen::Vector3d(1.01, 0.5, 0),
                            Eigen::Vector3d(0.99, 0.5, 0)}) {
    fits.push_back(detect_torus(map, {s}, static_cast<long>(4 / e3), static_cast<long>(2.2 / e3), o));
    scale = std::max({scale, fits.back().invariance_residual, fits.back().tube});
  }
  for (size_t i = 0; i < fits.size(); ++i)
    for (size_t j = i + 1; j < fits.size(); ++j)
      CHECK(hausdorff(fits[i].curve.sample(2048), fits[j].curve.sample(2048)) <= 2 * scale);
  CHECK(fits[0].distance_to_unperturbed < 0.02);
}
