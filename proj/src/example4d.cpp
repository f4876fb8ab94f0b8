#include "avgtori/example4d.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "avgtori/errors.hpp"

namespace avgtori::example4d {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kQuarterInvPi = 1.0 / (4.0 * std::numbers::pi);

bool uses_time(const Expr& e) {
  switch (e.op()) {
    case Op::Time:
      return true;
    case Op::Lit:
    case Op::Pi:
    case Op::Var:
      return false;
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Pow:
      return uses_time(e.lhs());
    default:
      return uses_time(e.lhs()) || uses_time(e.rhs());
  }
}

std::string mu_literal(int mu) { return mu > 0 ? "1" : "(-1)"; }

}  // namespace

Config Config::standard(int N, int mu) {
  Config c;
  c.N = N;
  c.mu = mu;
  c.f = {parse_expr("x2*x3", 4), parse_expr("-x1*x4", 4), parse_expr("x1^3", 4), parse_expr("x2^3", 4)};
  c.h = {Expr(), Expr(), Expr(), Expr()};
  return c;
}

double average_defect(const Config& cfg, int samples) {
  std::array<CompiledExpr, 4> f;
  for (int i = 0; i < 4; ++i) f[i] = CompiledExpr(cfg.f[i]);
  std::mt19937_64 rng(0x4d0a11);
  std::uniform_real_distribution<double> ur(0.5, 1.5), uw(-1.0, 1.0);
  // the integrands are trigonometric in theta; the periodic trapezoid rule is spectrally accurate
  constexpr int kNodes = 512;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double r = ur(rng), u = uw(rng), v = uw(rng);
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
    for (int q = 0; q < kNodes; ++q) {
      const double th = kTwoPi * q / kNodes;
      const double c = std::cos(th), sn = std::sin(th);
      const double x[4] = {r * c, r * sn, u, v};
      a0 += c * f[0](th, x) + sn * f[1](th, x);
      a1 += f[2](th, x);
      a2 += f[3](th, x);
    }
    worst = std::max({worst, std::abs(a0) / kNodes, std::abs(a1) / kNodes, std::abs(a2) / kNodes});
  }
  return worst;
}

void Config::validate(double tol) const {
  if (N < 2) throw std::invalid_argument("example4d: N must be at least 2");
  if (mu != 1 && mu != -1) throw std::invalid_argument("example4d: mu must be +1 or -1");
  for (int i = 0; i < 4; ++i) {
    if (max_variable(f[i]) > 4 || max_variable(h[i]) > 4)
      throw std::invalid_argument("example4d: f and h may only use x1..x4");
    if (uses_time(f[i]) || uses_time(h[i]))
      throw std::invalid_argument("example4d: f and h must not depend on t");
  }
  const double d = average_defect(*this);
  if (!(d <= tol))
    throw HypothesisError("example4d: the theta-averages of cos*f1 + sin*f2, f3, f4 do not vanish (defect " +
                          std::to_string(d) + ")");
}

namespace {

SystemSpec build_spec(const Config& cfg) {
  const Expr r = Expr::variable(1), t = Expr::time();
  const std::array<Expr, 4> repl = {r * cos(t), r * sin(t), Expr::variable(2), Expr::variable(3)};
  std::vector<std::vector<Expr>> comps(cfg.N + 1, std::vector<Expr>(3));
  auto& fn = comps[cfg.N - 1];
  fn[0] = cos(t) * substitute(cfg.f[0], repl, t) + sin(t) * substitute(cfg.f[1], repl, t);
  fn[1] = substitute(cfg.f[2], repl, t);
  fn[2] = substitute(cfg.f[3], repl, t);
  const std::string mu = mu_literal(cfg.mu);
  auto& fn1 = comps[cfg.N];
  fn1[0] = parse_expr("0.5*x1^3*" + mu + "*((x1^2 + 1)*cos(2*t) - x1^2 + 1)", 3);
  fn1[1] = parse_expr("x1^2*cos(t)^2*(-x2^3 - x2*x3^2 + x2 + x3)", 3);
  fn1[2] = parse_expr("-x1^2*sin(t)^2*(x2^2*x3 + x2 + x3^3 - x3)", 3);
  return SystemSpec("example4d-cylindrical", 3, kTwoPi, cfg.N + 1, std::move(comps));
}

}  // namespace

Model::Model(Config cfg) : cfg_(std::move(cfg)), spec_((cfg_.validate(), build_spec(cfg_))) {
  for (int i = 0; i < 4; ++i) {
    f_[i] = CompiledExpr(cfg_.f[i]);
    h_[i] = CompiledExpr(cfg_.h[i]);
  }
}

void Model::cartesian_field(double eps, const double* s, double* out) const {
  const double x = s[0], y = s[1], u = s[2], v = s[3];
  const double r2 = x * x + y * y;
  const double w = 1.0 - u * u - v * v;
  const double mu = cfg_.mu;
  const double g[4] = {mu * x * r2, -mu * y * r2 * r2, x * x * (u * w + v), y * y * (v * w - u)};
  const double en = std::pow(eps, cfg_.N);
  const double en1 = en * eps, en2 = en1 * eps;
  out[0] = -y;
  out[1] = x;
  out[2] = 0.0;
  out[3] = 0.0;
  if (eps == 0.0) return;
  for (int i = 0; i < 4; ++i) {
    double val = en * f_[i](0.0, s) + en1 * g[i];
    if (!h_[i].is_zero()) val += en2 * h_[i](0.0, s);
    out[i] += val;
  }
}

Eigen::Vector4d Model::cartesian_field(double eps, const Eigen::Vector4d& s) const {
  Eigen::Vector4d out;
  cartesian_field(eps, s.data(), out.data());
  return out;
}

double Model::theta_rate(double eps, double theta, const Eigen::Vector3d& ruv) const {
  const double r = ruv(0);
  if (!(r > 0.0)) throw ValidityError("example4d: the angular reduction needs r > 0");
  const double s[4] = {r * std::cos(theta), r * std::sin(theta), ruv(1), ruv(2)};
  double d[4];
  cartesian_field(eps, s, d);
  return (s[0] * d[1] - s[1] * d[0]) / (r * r);
}

double Model::theta_deviation(double eps) const {
  double worst = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 8; ++b)
        for (int c = 0; c <= 8; ++c) {
          const Eigen::Vector3d ruv(0.5 + 0.25 * a, -2.0 + 0.5 * b, -2.0 + 0.5 * c);
          worst = std::max(worst, std::abs(theta_rate(eps, 2 * std::numbers::pi * i / 64, ruv) - 1.0));
        }
  return worst;
}

void Model::check_eps(double eps) const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("example4d: eps must be finite and >= 0");
  const double d = theta_deviation(eps);
  if (!(d < 0.5))
    throw ValidityError("example4d: eps = " + std::to_string(eps) + " is too large, |theta_dot - 1| reaches " +
                        std::to_string(d) + " on the working box (limit 0.5)");
}

void Model::cylindrical_field(double eps, double theta, const double* ruv, double* out) const {
  const double r = ruv[0];
  if (!(r > 0.0)) throw ValidityError("example4d: the angular reduction needs r > 0");
  const double c = std::cos(theta), sn = std::sin(theta);
  const double s[4] = {r * c, r * sn, ruv[1], ruv[2]};
  double d[4];
  cartesian_field(eps, s, d);
  const double theta_dot = (s[0] * d[1] - s[1] * d[0]) / (r * r);
  if (!(std::abs(theta_dot - 1.0) < 0.5))
    throw ValidityError("example4d: theta' = " + std::to_string(theta_dot) +
                        " leaves (1/2, 3/2); eps is too large for the angular reduction");
  const double r_dot = (s[0] * d[0] + s[1] * d[1]) / r;
  out[0] = r_dot / theta_dot;
  out[1] = d[2] / theta_dot;
  out[2] = d[3] / theta_dot;
}

Eigen::Vector3d Model::cylindrical_field(double eps, double theta, const Eigen::Vector3d& ruv) const {
  Eigen::Vector3d out;
  cylindrical_field(eps, theta, ruv.data(), out.data());
  return out;
}

Eigen::Vector3d Model::coefficient(int order, double theta, const Eigen::Vector3d& ruv) const {
  const double r = ruv(0), u = ruv(1), v = ruv(2);
  const double c = std::cos(theta), sn = std::sin(theta);
  if (order == cfg_.N) {
    const double s[4] = {r * c, r * sn, u, v};
    return {c * f_[0](theta, s) + sn * f_[1](theta, s), f_[2](theta, s), f_[3](theta, s)};
  }
  if (order == cfg_.N + 1) {
    const double r2 = r * r;
    return {0.5 * r2 * r * cfg_.mu * ((r2 + 1.0) * std::cos(2.0 * theta) - r2 + 1.0),
            r2 * c * c * (-u * u * u - u * v * v + u + v), -r2 * sn * sn * (u * u * v + u + v * v * v - v)};
  }
  throw std::out_of_range("example4d: coefficient order must be N or N+1");
}

Eigen::Vector3d melnikov_closed_form(int mu, const Eigen::Vector3d& z) {
  const double r = z(0), u = z(1), v = z(2);
  const double r2 = r * r;
  return {mu * r2 * r * (1.0 - r2) / 2.0, r2 * (-u * u * u - u * v * v + u + v) / 2.0,
          -r2 * (u * u * v + u + v * v * v - v) / 2.0};
}

Eigen::Vector3d guiding_field(int mu, const Eigen::Vector3d& z) {
  return melnikov_closed_form(mu, z) / kTwoPi;
}

Eigen::Matrix3d guiding_jacobian(int mu, const Eigen::Vector3d& z) {
  const double r = z(0), u = z(1), v = z(2);
  const double r2 = r * r, k = kQuarterInvPi;
  const double p = -u * u * u - u * v * v + u + v;
  const double q = u * u * v + u + v * v * v - v;
  Eigen::Matrix3d j;
  j << k * mu * (3.0 * r2 - 5.0 * r2 * r2), 0.0, 0.0,
      2.0 * k * r * p, k * r2 * (1.0 - 3.0 * u * u - v * v), k * r2 * (1.0 - 2.0 * u * v),
      -2.0 * k * r * q, -k * r2 * (2.0 * u * v + 1.0), -k * r2 * (u * u + 3.0 * v * v - 1.0);
  return j;
}

double guiding_divergence(int mu, const Eigen::Vector3d& z) {
  const double r2 = z(0) * z(0);
  return kQuarterInvPi * (mu * (3.0 * r2 - 5.0 * r2 * r2) + r2 * (2.0 - 4.0 * z(1) * z(1) - 4.0 * z(2) * z(2)));
}

AutonomousField guiding_system(int mu) {
  if (mu != 1 && mu != -1) throw std::invalid_argument("example4d: mu must be +1 or -1");
  AutonomousField g;
  g.dim = 3;
  g.eval = [mu](const double* z, double* out) {
    Eigen::Map<Eigen::Vector3d> o(out);
    o = guiding_field(mu, Eigen::Vector3d(z[0], z[1], z[2]));
  };
  g.jacobian = [mu](const double* z, double* jac) {
    Eigen::Map<Eigen::Matrix3d> j(jac);
    j = guiding_jacobian(mu, Eigen::Vector3d(z[0], z[1], z[2]));
  };
  g.divergence = [mu](const double* z) { return guiding_divergence(mu, Eigen::Vector3d(z[0], z[1], z[2])); };
  return g;
}

CartesianSection::CartesianSection(const Model& model, double eps, IntegratorConfig cfg)
    : model_(&model),
      eps_(eps),
      integ_(4, [m = &model, eps](double, const double* s, double* d) { m->cartesian_field(eps, s, d); },
             std::move(cfg)) {}

Eigen::Vector3d CartesianSection::operator()(const Eigen::Vector3d& xuv) {
  if (!(xuv(0) > 0.0)) throw ValidityError("example4d: section points need x > 0");
  Eigen::VectorXd s(4);
  s << xuv(0), 0.0, xuv(1), xuv(2);
  const auto hit = integ_.advance_to_section(
      0.0, s, [](const double* z) { return z[1]; }, [](const double* z) { return z[0] > 0.0; },
      4.0 * kTwoPi);
  return {hit.z(0), hit.z(2), hit.z(3)};
}

CylindricalSection::CylindricalSection(const Model& model, double eps, IntegratorConfig cfg)
    : model_(&model),
      eps_(eps),
      integ_(3, [m = &model, eps](double th, const double* z, double* d) { m->cylindrical_field(eps, th, z, d); },
             std::move(cfg)) {}

Eigen::Vector3d CylindricalSection::operator()(const Eigen::Vector3d& ruv) {
  const Eigen::VectorXd out = integ_.advance(0.0, kTwoPi, Eigen::VectorXd(ruv));
  return out;
}

}  // namespace avgtori::example4d

namespace avgtori::example4d {

SectionMap cartesian_map(std::shared_ptr<const Model> model, double eps, IntegratorConfig cfg) {
  if (!model) throw std::invalid_argument("example4d: null model");
  cfg.validate();
  model->check_eps(eps);
  auto sec = std::make_shared<CartesianSection>(*model, eps, cfg);
  return SectionMap("example4d/cartesian", 3, eps, [model, sec](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((*sec)(Eigen::Vector3d(x(0), x(1), x(2))));
  });
}

SectionMap cylindrical_map(std::shared_ptr<const Model> model, double eps, IntegratorConfig cfg) {
  if (!model) throw std::invalid_argument("example4d: null model");
  cfg.validate();
  model->check_eps(eps);
  auto sec = std::make_shared<CylindricalSection>(*model, eps, cfg);
  return SectionMap("example4d/cylindrical", 3, eps, [model, sec](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((*sec)(Eigen::Vector3d(x(0), x(1), x(2))));
  });
}

std::vector<Eigen::VectorXd> guiding_section_trace(int samples) {
  if (samples < 3) throw std::invalid_argument("guiding_section_trace: need at least 3 samples");
  std::vector<Eigen::VectorXd> out;
  for (int j = 0; j < samples; ++j) {
    const double s = kTwoPi * j / samples;
    out.push_back(Eigen::Vector3d(1.0, std::cos(s), -std::sin(s)));
  }
  return out;
}

Fig1Result reproduce_fig1(const Fig1Options& opts) {
  if (!(opts.eps > 0.0) || opts.iterations < 1 || opts.tail < 1 || opts.tail > opts.iterations ||
      opts.fit_transient < 0 || opts.fit_transient >= opts.iterations)
    throw std::invalid_argument("reproduce_fig1: invalid options");
  auto model = std::make_shared<const Model>(Config::standard(2, 1));
  const SectionMap map = cartesian_map(model, opts.eps, opts.integ);

  Fig1Result res;
  res.seeds = {Eigen::Vector4d(1.01, 0, 2, 0), Eigen::Vector4d(0.99, 0, 2, 0), Eigen::Vector4d(1.01, 0, 0.5, 0),
               Eigen::Vector4d(0.99, 0, 0.5, 0)};
  res.bounded = true;
  for (const auto& s : res.seeds) {
    try {
      res.orbits.push_back(poincare_iterate(map, Eigen::Vector3d(s(0), s(2), s(3)), opts.iterations));
    } catch (const EscapeError& e) {
      res.bounded = false;
      res.failure = e.what();
      res.orbits.emplace_back();
    }
  }
  if (!res.bounded) return res;

  std::vector<std::vector<Eigen::VectorXd>> fit_set;
  for (const auto& orb : res.orbits) fit_set.emplace_back(orb.begin() + opts.fit_transient, orb.end());
  TorusOptions topts = opts.torus;
  if (topts.reference.empty()) topts.reference = guiding_section_trace();
  res.torus = fit_torus(map, fit_set, topts);
  res.torus.seeds_used = static_cast<int>(res.orbits.size());

  for (const auto& orb : res.orbits)
    for (auto it = orb.end() - opts.tail; it != orb.end(); ++it)
      res.tube = std::max(res.tube, res.torus.curve.distance(*it));

  const auto samples = res.torus.curve.sample(topts.curve_samples);
  std::vector<Eigen::VectorXd> uv, circle;
  for (const auto& p : samples) {
    uv.push_back(Eigen::Vector2d(p(1), p(2)));
    res.hausdorff_x = std::max(res.hausdorff_x, std::abs(p(0) - 1.0));
  }
  for (const auto& p : topts.reference) circle.push_back(Eigen::Vector2d(p(1), p(2)));
  res.hausdorff_uv = hausdorff(uv, circle);
  return res;
}

}  // namespace avgtori::example4d
