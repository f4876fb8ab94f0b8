#include "avgtori/bell.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace avgtori::bell {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

BellTable::BellTable(int max_n) : max_n_(max_n) {
  if (max_n < 1 || max_n > kMaxSupported)
    throw std::invalid_argument("BellTable: max_n must lie in [1, " +
                                std::to_string(kMaxSupported) + "]");
  const auto size = static_cast<std::size_t>((max_n + 1) * (max_n + 1));
  table_.resize(size);
  // Polynomials keyed by exponent vectors while building, flattened at the end.
  using Poly = std::map<std::vector<int>, std::int64_t>;
  std::vector<Poly> poly(size);
  auto slot = [&](int n, int k) -> Poly& {
    return poly[static_cast<std::size_t>(n * (max_n + 1) + k)];
  };
  slot(0, 0)[std::vector<int>(static_cast<std::size_t>(max_n), 0)] = 1;
  for (int n = 1; n <= max_n; ++n) {
    for (int k = 1; k <= n; ++k) {
      Poly& out = slot(n, k);
      for (int j = 1; j <= n - k + 1; ++j) {
        const std::int64_t c = binomial(n - 1, j - 1);
        for (const auto& [expo, coeff] : slot(n - j, k - 1)) {
          auto e = expo;
          ++e[static_cast<std::size_t>(j - 1)];
          out[e] += c * coeff;
        }
      }
    }
  }
  for (int n = 0; n <= max_n; ++n) {
    for (int k = 0; k <= n; ++k) {
      auto& dst = table_[static_cast<std::size_t>(n * (max_n + 1) + k)];
      for (const auto& [expo, coeff] : slot(n, k)) {
        BellTerm term{coeff, {}};
        for (int j = 0; j < max_n; ++j)
          for (int p = 0; p < expo[static_cast<std::size_t>(j)]; ++p)
            term.indices.push_back(j + 1);
        dst.push_back(std::move(term));
      }
    }
  }
}

const std::vector<BellTerm>& BellTable::terms(int n, int k) const {
  static const std::vector<BellTerm> kEmpty;
  if (n < 0 || k < 0 || n > max_n_ || k > n) {
    if (n > max_n_) throw std::out_of_range("BellTable: n exceeds table size");
    return kEmpty;
  }
  return at(n, k);
}

void BellTable::check_args(int n, int k, std::size_t count) const {
  if (k < 1 || n < 1) throw std::invalid_argument("bell: require 1 <= k <= n");
  if (k > n) throw std::invalid_argument("bell: k must not exceed n");
  if (n > max_n_) throw std::out_of_range("bell: n exceeds table size");
  if (count != static_cast<std::size_t>(n - k + 1))
    throw std::invalid_argument("bell: expected " + std::to_string(n - k + 1) +
                                " arguments, got " + std::to_string(count));
}

std::int64_t BellTable::eval(int n, int k, std::span<const std::int64_t> x) const {
  check_args(n, k, x.size());
  std::int64_t sum = 0;
  for (const auto& t : at(n, k)) {
    std::int64_t p = t.coeff;
    for (int i : t.indices) p *= x[static_cast<std::size_t>(i - 1)];
    sum += p;
  }
  return sum;
}

double BellTable::eval(int n, int k, std::span<const double> x) const {
  check_args(n, k, x.size());
  double sum = 0.0;
  for (const auto& t : at(n, k)) {
    double p = static_cast<double>(t.coeff);
    for (int i : t.indices) p *= x[static_cast<std::size_t>(i - 1)];
    sum += p;
  }
  return sum;
}

Eigen::VectorXd BellTable::eval(int n, int k, std::span<const Eigen::VectorXd> x) const {
  check_args(n, k, x.size());
  const auto dim = x.front().size();
  for (const auto& v : x)
    if (v.size() != dim) throw std::invalid_argument("bell: vector arguments differ in size");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& t : at(n, k)) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(dim, static_cast<double>(t.coeff));
    for (int i : t.indices) p = p.cwiseProduct(x[static_cast<std::size_t>(i - 1)]);
    sum += p;
  }
  return sum;
}

const BellTable& shared_table() {
  static const BellTable table(BellTable::kMaxSupported);
  return table;
}

std::int64_t bell_eval(int n, int k, std::span<const std::int64_t> x) {
  return shared_table().eval(n, k, x);
}
double bell_eval(int n, int k, std::span<const double> x) { return shared_table().eval(n, k, x); }
Eigen::VectorXd bell_eval(int n, int k, std::span<const Eigen::VectorXd> x) {
  return shared_table().eval(n, k, x);
}

}  // namespace avgtori::bell
