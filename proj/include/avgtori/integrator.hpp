#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "avgtori/errors.hpp"
#include "avgtori/jet.hpp"

namespace avgtori {

class SystemSpec;

enum class Method { RK4, RK45 };

struct IntegratorConfig {
  Method method = Method::RK45;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double step = 0.0;  // fixed step for RK4
  long max_steps = 50'000'000;
  double blowup = 1e8;  // any |z_i| above this aborts with BlowUpError

  static IntegratorConfig adaptive(double abs_tol = 1e-10, double rel_tol = 1e-10);
  static IntegratorConfig fixed(double step);

  /// Throws std::invalid_argument on non-positive tolerances, steps or budgets.
  void validate() const;
};

/// Right-hand side z' = f(t, z) writing into dz.
using RhsFn = std::function<void(double t, const double* z, double* dz)>;
/// Jacobian Df(t, z) written column-major into an n x n buffer.
using JacobianFn = std::function<void(double t, const double* z, double* jac)>;
/// Scalar section function; a return is a crossing from negative to non-negative.
using SectionFn = std::function<double(const double* z)>;
using GateFn = std::function<bool(const double* z)>;

/// Explicit Runge-Kutta integrator: classical RK4 with a fixed step, or the
/// Dormand-Prince 5(4) pair with standard step-size control. Deterministic for
/// a given configuration.
class Integrator {
 public:
  Integrator(int dim, RhsFn rhs, IntegratorConfig cfg);

  int dim() const { return dim_; }
  const IntegratorConfig& config() const { return cfg_; }

  /// State at t1 starting from z0 at t0; t1 < t0 integrates backwards.
  Eigen::VectorXd advance(double t0, double t1, const Eigen::VectorXd& z0);

  /// Same, also reporting the state after every accepted step.
  Eigen::VectorXd advance(double t0, double t1, const Eigen::VectorXd& z0,
                          const std::function<void(double, const double*)>& observer);

  struct Crossing {
    double t;
    Eigen::VectorXd z;
  };
  /// Integrates forward until the section function changes sign from negative
  /// to non-negative at a state accepted by `gate`. The crossing time is located
  /// by bisection on a sub-step to within `time_tol`.
  Crossing advance_to_section(double t0, const Eigen::VectorXd& z0, const SectionFn& section,
                              const GateFn& gate, double t_max, double time_tol = 1e-12);

  long steps_taken() const { return steps_; }

 private:
  // One step of length h from (t, z) into out; returns the scaled error norm
  // (0 for RK4). FSAL data is used when `k1_valid`.
  double attempt(double t, const double* z, double h, double* out, bool want_error);
  void check_state(double t, const double* z) const;
  double initial_step(double t0, const double* z0, double direction);

  int dim_;
  RhsFn rhs_;
  IntegratorConfig cfg_;
  std::vector<double> k_[7];
  std::vector<double> tmp_, err_;
  bool k1_valid_ = false;
  long steps_ = 0;
};

Eigen::VectorXd flow(const RhsFn& field, int dim, double t0, double t1, const Eigen::VectorXd& z0,
                     const IntegratorConfig& cfg);

/// Base point and fundamental matrix of the linearised flow, Psi(t0) = I.
struct VariationalState {
  Eigen::VectorXd z;
  Eigen::MatrixXd psi;
};

VariationalState flow_variational(const RhsFn& field, const JacobianFn& jacobian, int dim, double t0,
                                  double t1, const Eigen::VectorXd& z0, const IntegratorConfig& cfg);

/// x' = sum eps^i F_i(t, x) (+ eps^{N+1} remainder) at a fixed eps.
RhsFn system_rhs(const SystemSpec& spec, double eps);
JacobianFn system_jacobian(const SystemSpec& spec, double eps);

/// Epsilon-jet of the solution x(t1; t0, z0, eps), obtained by integrating the
/// Taylor-coefficient hierarchy x_k' = [eps^k] sum_i eps^i F_i(t, sum_j eps^j x_j),
/// where the bracket is computed with truncated series arithmetic.
EpsJet flow_jet(const SystemSpec& spec, double t0, double t1, const Eigen::VectorXd& z0,
                const IntegratorConfig& cfg);

}  // namespace avgtori
