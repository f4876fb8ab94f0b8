#include "avgtori/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace avgtori {

namespace {
void require_same_order(int a, int b) {
  if (a != b) throw std::invalid_argument("jet order mismatch");
}
}  // namespace

Series::Series(double value, int order) : c_(static_cast<std::size_t>(order + 1), 0.0) {
  if (order < 0) throw std::invalid_argument("Series: negative order");
  c_[0] = value;
}

Series::Series(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) throw std::invalid_argument("Series: empty coefficient list");
}

Series& Series::operator+=(const Series& o) {
  require_same_order(order(), o.order());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Series& Series::operator-=(const Series& o) {
  require_same_order(order(), o.order());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Series& Series::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Series operator*(const Series& a, const Series& b) {
  require_same_order(a.order(), b.order());
  const int n = a.order();
  Series r(0.0, n);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
    r[k] = s;
  }
  return r;
}

Series operator/(const Series& a, const Series& b) {
  require_same_order(a.order(), b.order());
  if (b[0] == 0.0) throw std::domain_error("Series: division by a series with zero constant term");
  const int n = a.order();
  Series q(0.0, n);
  for (int k = 0; k <= n; ++k) {
    double s = a[k];
    for (int j = 1; j <= k; ++j) s -= b[j] * q[k - j];
    q[k] = s / b[0];
  }
  return q;
}

namespace {
// sin and cos share the recurrences s' = c a', c' = -s a'.
void sincos(const Series& a, Series& s, Series& c) {
  const int n = a.order();
  s = Series(std::sin(a[0]), n);
  c = Series(std::cos(a[0]), n);
  for (int k = 1; k <= n; ++k) {
    double ss = 0.0, cc = 0.0;
    for (int j = 1; j <= k; ++j) {
      ss += j * a[j] * c[k - j];
      cc -= j * a[j] * s[k - j];
    }
    s[k] = ss / k;
    c[k] = cc / k;
  }
}
}  // namespace

Series sin(const Series& a) {
  Series s, c;
  sincos(a, s, c);
  return s;
}

Series cos(const Series& a) {
  Series s, c;
  sincos(a, s, c);
  return c;
}

Series exp(const Series& a) {
  const int n = a.order();
  Series e(std::exp(a[0]), n);
  for (int k = 1; k <= n; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a[j] * e[k - j];
    e[k] = s / k;
  }
  return e;
}

Series pow_int(const Series& a, int p) {
  if (p < 0) return Series(1.0, a.order()) / pow_int(a, -p);
  Series result(1.0, a.order());
  Series base = a;
  while (p > 0) {
    if (p & 1) result = result * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return result;
}

EpsJet::EpsJet(std::vector<Eigen::VectorXd> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) throw std::invalid_argument("EpsJet: empty coefficient list");
  for (const auto& v : c_)
    if (v.size() != c_.front().size())
      throw std::invalid_argument("EpsJet: coefficients differ in dimension");
}

EpsJet EpsJet::constant(const Eigen::VectorXd& v, int order) {
  if (order < 0) throw std::invalid_argument("EpsJet: negative order");
  std::vector<Eigen::VectorXd> c(static_cast<std::size_t>(order + 1),
                                 Eigen::VectorXd::Zero(v.size()));
  c[0] = v;
  return EpsJet(std::move(c));
}

const Eigen::VectorXd& EpsJet::extract(int i) const {
  if (i < 0 || i > order()) throw std::out_of_range("EpsJet: coefficient index out of range");
  return c_[static_cast<std::size_t>(i)];
}

Eigen::VectorXd EpsJet::evaluate(double eps) const {
  Eigen::VectorXd acc = c_.back();
  for (int i = order() - 1; i >= 0; --i) acc = acc * eps + c_[static_cast<std::size_t>(i)];
  return acc;
}

EpsJet& EpsJet::operator+=(const EpsJet& o) {
  require_same_order(order(), o.order());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

EpsJet& EpsJet::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

EpsJet jet_mul(const EpsJet& a, const EpsJet& b) {
  require_same_order(a.order(), b.order());
  const auto da = a.dim(), db = b.dim();
  if (da != db && da != 1 && db != 1)
    throw std::invalid_argument("jet_mul: incompatible coefficient shapes");
  const auto d = std::max(da, db);
  auto times = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    if (x.size() == 1) return x[0] * y;
    if (y.size() == 1) return y[0] * x;
    return x.cwiseProduct(y);
  };
  std::vector<Eigen::VectorXd> c(static_cast<std::size_t>(a.order() + 1),
                                 Eigen::VectorXd::Zero(d));
  for (int k = 0; k <= a.order(); ++k)
    for (int j = 0; j <= k; ++j)
      c[static_cast<std::size_t>(k)] += times(a.extract(j), b.extract(k - j));
  return EpsJet(std::move(c));
}

const Eigen::VectorXd& jet_extract(const EpsJet& a, int i) { return a.extract(i); }

}  // namespace avgtori
