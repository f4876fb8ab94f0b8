#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "avgtori/guiding.hpp"
#include "avgtori/integrator.hpp"
#include "avgtori/system.hpp"

namespace avgtori {

struct QuadConfig {
  double abs_tol = 1e-10;
  int max_panels = 4000;
};

/// y_i(t, z) of the recursion
///   y_i(t,z) = int_0^t ( i! F_i + sum_{j<i} sum_{m<=j} (i!/j!) d^m F_{i-j} B_{j,m}(y_1..y_{j-m+1}) ) ds
/// evaluated by adaptive Gauss-Kronrod panels. Requires 1 <= i <= N and t >= 0.
Eigen::VectorXd y_function(const SystemSpec& spec, int i, double t, const Eigen::VectorXd& z,
                           const QuadConfig& quad = {});

/// f_i(z) = y_i(T, z) / i!.
Eigen::VectorXd melnikov_f(const SystemSpec& spec, int i, const Eigen::VectorXd& z, const QuadConfig& quad = {});

/// f_1(z) .. f_i(z) from one shared evaluation of the recursion.
std::vector<Eigen::VectorXd> melnikov_all(const SystemSpec& spec, int i, const Eigen::VectorXd& z,
                                          const QuadConfig& quad = {});

/// Coefficient i of the eps-jet of the time-T map at z, from the series
/// integration of flow_jet. Independent of the Bell-polynomial route.
Eigen::VectorXd jet_oracle_f(const SystemSpec& spec, int i, const Eigen::VectorXd& z,
                             const IntegratorConfig& cfg = IntegratorConfig::adaptive(1e-12, 1e-12));

/// Sample box used to test that lower-order Melnikov functions vanish.
struct VanishingGrid {
  double lo = -1.0;
  double hi = 1.0;
  int per_dim = 32;
  double threshold = 1e-8;
};

/// Number of leading orders F_1..F_a that are symbolically zero.
int leading_zero_orders(const SystemSpec& spec);

/// max |f_j(z)| over the grid for j < l (0 when the lower orders vanish symbolically).
double lower_order_defect(const SystemSpec& spec, int l, const VanishingGrid& grid = {}, const QuadConfig& quad = {});

/// g_l = f_l / T under the hypothesis that f_1 = ... = f_{l-1} = 0. The
/// hypothesis is checked once at construction; a violation throws HypothesisError.
class AveragedField {
 public:
  AveragedField(const SystemSpec& spec, int l, const VanishingGrid& grid = {}, const QuadConfig& quad = {});

  int order() const { return l_; }
  double lower_defect() const { return defect_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const;

  /// z' = g_l(z) as an autonomous field. When only the plain average of F_l
  /// enters (the lower orders vanish symbolically far enough), g_l and its
  /// Jacobian are the periodic trapezoid averages of F_l and dF_l; otherwise
  /// the recursion is used with a central-difference Jacobian.
  AutonomousField autonomous() const;

 private:
  const SystemSpec* spec_;
  int l_;
  QuadConfig quad_;
  double defect_ = 0.0;
};

/// One-shot form of AveragedField.
Eigen::VectorXd averaged_g(const SystemSpec& spec, int l, const Eigen::VectorXd& z, const QuadConfig& quad = {},
                           const VanishingGrid& grid = {});

}  // namespace avgtori
