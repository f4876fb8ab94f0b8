#pragma once

#include <functional>

#include <Eigen/Dense>

#include "avgtori/integrator.hpp"

namespace avgtori {

/// Autonomous vector field z' = g(z) with its Jacobian. The divergence is
/// optional; the trace of the Jacobian is used when it is absent.
struct AutonomousField {
  int dim = 0;
  std::function<void(const double* z, double* out)> eval;
  std::function<void(const double* z, double* jac)> jacobian;  // column-major
  std::function<double(const double* z)> divergence;

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& z) const;
  double divergence_at(const Eigen::VectorXd& z) const;

  RhsFn rhs() const;
  JacobianFn rhs_jacobian() const;
};

struct CycleConfig {
  double tol = 1e-10;  // Newton residual
  int max_iter = 50;
  double unit_band = 1e-4;  // |(|lambda| - 1)| below this counts as on the unit circle
  IntegratorConfig integ = IntegratorConfig::adaptive(1e-13, 1e-13);
};

struct LimitCycle {
  Eigen::VectorXd anchor;
  double period = 0.0;
  Eigen::MatrixXd monodromy;
  Eigen::VectorXcd multipliers;
  Eigen::MatrixXcd eigenvectors;  // columns match `multipliers`
  int trivial_index = -1;
  int k = 0;  // nontrivial multipliers inside the unit circle
  bool hyperbolic = false;
  double residual = 0.0;  // |flow_omega(anchor) - anchor|
  int iterations = 0;
};

/// Eigenvalues and right eigenvectors of a real matrix, computed with
/// permutation and scaling balancing so that reducible matrices keep their
/// isolated eigenvalues exact.
void real_eigen(const Eigen::MatrixXd& m, Eigen::VectorXcd& values, Eigen::MatrixXcd& vectors);

/// Fills multipliers, trivial index, k and the hyperbolicity flag from a
/// monodromy matrix. The trivial multiplier is the one whose eigenvector is
/// best aligned with `tangent` (closest to 1 when no tangent is given).
LimitCycle analyze_monodromy(Eigen::VectorXd anchor, double period, Eigen::MatrixXd monodromy,
                             const Eigen::VectorXd& tangent, double unit_band = 1e-4);

/// Newton shooting on (z, omega) with the phase condition
/// g(z_guess) . (z - z_guess) = 0. Throws SolverError on divergence or a
/// singular Newton matrix; non-hyperbolic cycles are returned with the flag unset.
LimitCycle find_cycle(const AutonomousField& g, const Eigen::VectorXd& z_guess, double omega_guess,
                      const CycleConfig& cfg = {});

/// exp of the integral of div g along one period of the cycle.
double liouville_det(const AutonomousField& g, const LimitCycle& cycle,
                     const IntegratorConfig& cfg = IntegratorConfig::adaptive(1e-12, 1e-12));

struct FloquetLog {
  Eigen::MatrixXd B;
  bool doubled = false;
  double residual = 0.0;  // relative round-trip error
};

/// Real logarithm B with exp(omega B) = M, or exp(2 omega B) = M^2 when M has
/// negative real eigenvalues. Throws SolverError for Jordan blocks larger than
/// two or when the round trip misses by more than 1e-6 relative.
FloquetLog floquet_log(const LimitCycle& cycle);

struct StabilityClass {
  int k = 0;
  bool attracting = false;
  int unstable_directions = 0;
};

StabilityClass classify_stability(const LimitCycle& cycle);

}  // namespace avgtori
