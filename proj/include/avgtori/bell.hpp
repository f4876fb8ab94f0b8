#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace avgtori::bell {

/// One monomial of a partial Bell polynomial: coeff * x_{i_1} * ... * x_{i_k}.
/// `indices` is the sorted multiset of (1-based) argument indices.
struct BellTerm {
  std::int64_t coeff = 0;
  std::vector<int> indices;
};

/// Partial Bell polynomials B_{n,k} for 0 <= k <= n <= max_n, built once by
///   B_{n,k} = sum_{j=1}^{n-k+1} C(n-1, j-1) x_j B_{n-j,k-1}
/// and immutable afterwards, so a table can be shared between threads.
class BellTable {
 public:
  static constexpr int kMaxSupported = 12;

  explicit BellTable(int max_n);

  int max_n() const { return max_n_; }

  /// Monomials of B_{n,k}; empty for the identically-zero cases.
  const std::vector<BellTerm>& terms(int n, int k) const;

  /// Exact integer evaluation; x must hold exactly n-k+1 entries.
  std::int64_t eval(int n, int k, std::span<const std::int64_t> x) const;
  double eval(int n, int k, std::span<const double> x) const;
  /// Vector arguments are combined by the componentwise product.
  Eigen::VectorXd eval(int n, int k, std::span<const Eigen::VectorXd> x) const;

 private:
  void check_args(int n, int k, std::size_t count) const;
  const std::vector<BellTerm>& at(int n, int k) const {
    return table_[static_cast<std::size_t>(n * (max_n_ + 1) + k)];
  }

  int max_n_;
  std::vector<std::vector<BellTerm>> table_;
};

/// Shared read-only table covering every n up to kMaxSupported.
const BellTable& shared_table();

std::int64_t bell_eval(int n, int k, std::span<const std::int64_t> x);
double bell_eval(int n, int k, std::span<const double> x);
Eigen::VectorXd bell_eval(int n, int k, std::span<const Eigen::VectorXd> x);

std::int64_t binomial(int n, int k);

}  // namespace avgtori::bell
