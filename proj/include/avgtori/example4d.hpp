#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avgtori/expr.hpp"
#include "avgtori/guiding.hpp"
#include "avgtori/integrator.hpp"
#include "avgtori/system.hpp"
#include "avgtori/toruslab.hpp"

/// The four-dimensional system
///   x' = -y + eps^N f1 + eps^{N+1} g1 + eps^{N+2} h1
///   y' =  x + eps^N f2 + eps^{N+1} g2 + eps^{N+2} h2
///   u' =      eps^N f3 + eps^{N+1} g3 + eps^{N+2} h3
///   v' =      eps^N f4 + eps^{N+1} g4 + eps^{N+2} h4
/// with g1 = mu x (x^2+y^2), g2 = -mu y (x^2+y^2)^2, g3 = x^2 (u (1-u^2-v^2) + v),
/// g4 = y^2 (v (1-u^2-v^2) - u), which carries an invariant torus near
/// S^1 x S^1 = {x^2+y^2 = 1, u^2+v^2 = 1} for small eps.
namespace avgtori::example4d {

struct Config {
  int N = 2;
  int mu = 1;
  /// f1..f4 and h1..h4 as expressions in x1..x4 = (x, y, u, v).
  std::array<Expr, 4> f;
  std::array<Expr, 4> h;

  /// f = (y u, -x v, x^3, y^3), h = 0.
  static Config standard(int N = 2, int mu = 1);

  /// Checks N >= 2, mu = +-1 and that the theta-averages of
  /// cos f1 + sin f2, f3 and f4 vanish (to `tol`) at 10 sample points.
  void validate(double tol = 1e-10) const;
};

/// Largest |theta-average| of the three functions that must average to zero,
/// over `samples` pseudo-random points (r, u, v) in [0.5,1.5] x [-1,1]^2.
double average_defect(const Config& cfg, int samples = 10);

/// Compiled evaluators of one configuration.
class Model {
 public:
  explicit Model(Config cfg);

  const Config& config() const { return cfg_; }

  void cartesian_field(double eps, const double* s, double* out) const;
  Eigen::Vector4d cartesian_field(double eps, const Eigen::Vector4d& s) const;

  /// Angular velocity theta' at (r cos theta, r sin theta, u, v).
  double theta_rate(double eps, double theta, const Eigen::Vector3d& ruv) const;

  /// Largest |theta_dot - 1| over theta in [0, 2 pi) and the working box
  /// r in [0.5, 1.5], (u, v) in [-2, 2]^2 (sampled on a grid).
  double theta_deviation(double eps) const;
  /// Throws ValidityError when theta_deviation(eps) >= 1/2, i.e. when eps is
  /// too large for the angular reduction on the working box.
  void check_eps(double eps) const;

  /// Exact reduction with theta as independent variable:
  /// (r', u', v') = (r_dot, u_dot, v_dot) / theta_dot. Throws ValidityError
  /// when |theta_dot - 1| >= 1/2.
  void cylindrical_field(double eps, double theta, const double* ruv, double* out) const;
  Eigen::Vector3d cylindrical_field(double eps, double theta, const Eigen::Vector3d& ruv) const;

  /// (R_i, U_i, V_i) for i = N or N+1.
  Eigen::Vector3d coefficient(int order, double theta, const Eigen::Vector3d& ruv) const;

  /// Standard-form system in (r, u, v) with period 2 pi and orders 1..N+1:
  /// F_N = (R_N, U_N, V_N), F_{N+1} = (R_{N+1}, U_{N+1}, V_{N+1}), others zero.
  const SystemSpec& cylindrical_spec() const { return spec_; }

 private:
  Config cfg_;
  std::array<CompiledExpr, 4> f_, h_;
  SystemSpec spec_;
};

/// g_{N+1} = f_{N+1} / (2 pi) in (r, u, v).
Eigen::Vector3d guiding_field(int mu, const Eigen::Vector3d& z);
Eigen::Matrix3d guiding_jacobian(int mu, const Eigen::Vector3d& z);
double guiding_divergence(int mu, const Eigen::Vector3d& z);
AutonomousField guiding_system(int mu);

/// Closed form of the order-(N+1) Melnikov function.
Eigen::Vector3d melnikov_closed_form(int mu, const Eigen::Vector3d& z);

/// Return map of the Cartesian flow on {y = 0, x > 0}; section coordinates (x, u, v).
class CartesianSection {
 public:
  CartesianSection(const Model& model, double eps, IntegratorConfig cfg);
  Eigen::Vector3d operator()(const Eigen::Vector3d& xuv);

 private:
  const Model* model_;
  double eps_;
  Integrator integ_;
};

/// Time-2pi map of the theta-reduced flow; section coordinates (r, u, v),
/// which coincide with (x, u, v) on {y = 0, x > 0}.
class CylindricalSection {
 public:
  CylindricalSection(const Model& model, double eps, IntegratorConfig cfg);
  Eigen::Vector3d operator()(const Eigen::Vector3d& ruv);

 private:
  const Model* model_;
  double eps_;
  Integrator integ_;
};

/// Both factories run Model::check_eps first.
SectionMap cartesian_map(std::shared_ptr<const Model> model, double eps,
                         IntegratorConfig cfg = IntegratorConfig::adaptive(1e-10, 1e-10));
SectionMap cylindrical_map(std::shared_ptr<const Model> model, double eps,
                           IntegratorConfig cfg = IntegratorConfig::adaptive(1e-10, 1e-10));

/// Section trace {(1, cos s, -sin s)} of the guiding cycle, `samples` points.
std::vector<Eigen::VectorXd> guiding_section_trace(int samples = 4096);

struct Fig1Options {
  double eps = 1.0 / 15.0;
  long iterations = 10345;
  long tail = 500;            // iterates per seed checked against the tube
  long fit_transient = 3000;  // iterates per seed left out of the curve fit
  IntegratorConfig integ = IntegratorConfig::adaptive(1e-10, 1e-10);
  TorusOptions torus;
};

struct Fig1Result {
  std::vector<Eigen::Vector4d> seeds;
  std::vector<std::vector<Eigen::VectorXd>> orbits;  // section points (x, u, v)
  bool bounded = false;
  std::string failure;  // escape message when not bounded
  TorusEstimate torus;
  double tube = 0.0;          // largest distance of a tail iterate from the fitted curve
  double hausdorff_uv = 0.0;  // fitted (u, v) trace vs the unit circle
  double hausdorff_x = 0.0;   // max |x - 1| along the fitted curve
};

/// N = 2, mu = 1, h = 0 on the Cartesian section {y = 0, x > 0} from the seeds
/// (1.01,0,2,0), (0.99,0,2,0), (1.01,0,0.5,0), (0.99,0,0.5,0).
Fig1Result reproduce_fig1(const Fig1Options& opts = {});

}  // namespace avgtori::example4d
