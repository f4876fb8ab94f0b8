#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "avgtori/expr.hpp"
#include "avgtori/jet.hpp"

namespace avgtori {

/// A T-periodic perturbed vector field in standard form
///   x' = sum_{i=1}^N eps^i F_i(t, x) + eps^{N+1} R(t, x).
/// Components are expressions over t, x1..xn; all partial derivatives in x up
/// to order N are generated symbolically when the object is built.
class SystemSpec {
 public:
  /// components[i-1][c] is component c of F_i. `remainder` may be empty.
  SystemSpec(std::string name, int dim, double period, int order,
             std::vector<std::vector<Expr>> components, std::vector<Expr> remainder = {});

  const std::string& name() const { return name_; }
  int dimension() const { return dim_; }
  double period() const { return period_; }
  int order() const { return order_; }
  bool has_remainder() const { return !remainder_.empty(); }

  const Expr& component(int i, int c) const;
  const Expr& remainder(int c) const;
  /// True when every component of F_i is the literal 0.
  bool order_is_zero(int i) const;

  Eigen::VectorXd eval_order(int i, double t, const Eigen::VectorXd& x) const;

  /// Full right-hand side at a given eps (remainder included when present).
  void field(double eps, double t, const double* x, double* out) const;
  Eigen::VectorXd field(double eps, double t, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd field_jacobian(double eps, double t, const Eigen::VectorXd& x) const;

  /// d^m_x F_i(t, x) applied to the m direction vectors.
  Eigen::VectorXd derivative_tensor(int i, int m, double t, const Eigen::VectorXd& x,
                                    std::span<const Eigen::VectorXd> dirs) const;

  /// F_i evaluated on truncated eps-series arguments.
  std::vector<Series> eval_order_series(int i, const Series& t, std::span<const Series> x) const;

  /// Largest |F_i(t+T, x) - F_i(t, x)| over a deterministic sample of (t, x)
  /// points in [0, T) x [-box, box]^n.
  double periodicity_defect(int samples = 64, double box = 2.0) const;

  /// Canonical JSON text of the definition (used for fingerprints).
  std::string to_json_text() const;

 private:
  struct Partial {
    std::vector<Expr> exprs;
    std::vector<CompiledExpr> compiled;
  };
  const Partial& partial(int i, const std::vector<int>& vars) const;

  std::string name_;
  int dim_;
  double period_;
  int order_;
  std::vector<std::vector<Expr>> components_;
  std::vector<std::vector<CompiledExpr>> compiled_;
  std::vector<Expr> remainder_;
  std::vector<CompiledExpr> remainder_compiled_;
  // partials_[i-1] maps a sorted multiset of variable indices to d F_i.
  std::vector<std::map<std::vector<int>, Partial>> partials_;
};

/// Parses a system definition (JSON object with keys name, n, T, N, F, remainder).
/// Unknown keys are rejected; T may be a number or a constant expression.
SystemSpec parse_system(std::string_view text);
SystemSpec load_system(const std::filesystem::path& path);

/// Throws ValidityError when the declared period does not match the components.
void verify_periodicity(const SystemSpec& spec, double tol = 1e-10);

}  // namespace avgtori
