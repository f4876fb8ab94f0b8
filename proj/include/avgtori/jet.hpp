#pragma once

#include <vector>

#include <Eigen/Dense>

namespace avgtori {

/// Truncated Taylor polynomial in epsilon with scalar coefficients. Used to
/// push epsilon-expansions through expression evaluation.
class Series {
 public:
  Series() = default;
  Series(double value, int order);  // constant series
  explicit Series(std::vector<double> coeffs);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& coeffs() const { return c_; }

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double s);

  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator-(Series a) { return a *= -1.0; }
  friend Series operator*(const Series& a, const Series& b);
  friend Series operator/(const Series& a, const Series& b);
  friend Series operator*(Series a, double s) { return a *= s; }
  friend Series operator*(double s, Series a) { return a *= s; }

  friend Series sin(const Series& a);
  friend Series cos(const Series& a);
  friend Series exp(const Series& a);
  friend Series pow_int(const Series& a, int p);

 private:
  std::vector<double> c_;
};

/// Truncated epsilon-jet with n-vector coefficients c_0..c_N.
class EpsJet {
 public:
  EpsJet() = default;
  explicit EpsJet(std::vector<Eigen::VectorXd> coeffs);

  static EpsJet constant(const Eigen::VectorXd& v, int order);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  Eigen::Index dim() const { return c_.empty() ? 0 : c_.front().size(); }
  const std::vector<Eigen::VectorXd>& coeffs() const { return c_; }

  /// Coefficient of eps^i; throws std::out_of_range outside [0, order].
  const Eigen::VectorXd& extract(int i) const;

  /// Value of the polynomial at a given eps.
  Eigen::VectorXd evaluate(double eps) const;

  EpsJet& operator+=(const EpsJet& o);
  EpsJet& operator*=(double s);
  friend EpsJet operator+(EpsJet a, const EpsJet& b) { return a += b; }
  friend EpsJet operator*(EpsJet a, double s) { return a *= s; }

 private:
  std::vector<Eigen::VectorXd> c_;
};

/// Cauchy product truncated at the common order. A one-dimensional operand
/// acts as a scalar; equal dimensions multiply componentwise.
EpsJet jet_mul(const EpsJet& a, const EpsJet& b);
const Eigen::VectorXd& jet_extract(const EpsJet& a, int i);

}  // namespace avgtori
