#include "avgtori/guiding.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace avgtori {

Eigen::VectorXd AutonomousField::operator()(const Eigen::VectorXd& z) const {
  Eigen::VectorXd out(dim);
  eval(z.data(), out.data());
  return out;
}

Eigen::MatrixXd AutonomousField::jacobian_at(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd jac(dim, dim);
  jacobian(z.data(), jac.data());
  return jac;
}

double AutonomousField::divergence_at(const Eigen::VectorXd& z) const {
  if (divergence) return divergence(z.data());
  return jacobian_at(z).trace();
}

RhsFn AutonomousField::rhs() const {
  auto f = eval;
  return [f](double, const double* z, double* dz) { f(z, dz); };
}

JacobianFn AutonomousField::rhs_jacobian() const {
  auto j = jacobian;
  return [j](double, const double* z, double* jac) { j(z, jac); };
}

void real_eigen(const Eigen::MatrixXd& m, Eigen::VectorXcd& values, Eigen::MatrixXcd& vectors) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw std::invalid_argument("real_eigen: matrix must be square");
  if (!m.allFinite()) throw NonFiniteError("real_eigen: non-finite matrix entry");
  Eigen::MatrixXd a = m;  // column-major copy, overwritten by LAPACK
  std::vector<double> wr(n), wi(n), vr(static_cast<size_t>(n) * n), scale(n), rconde(n), rcondv(n);
  lapack_int ilo = 0, ihi = 0;
  double abnrm = 0.0;
  const lapack_int info =
      LAPACKE_dgeevx(LAPACK_COL_MAJOR, 'B', 'N', 'V', 'N', n, a.data(), n, wr.data(), wi.data(), nullptr,
                     1, vr.data(), n, &ilo, &ihi, scale.data(), &abnrm, rconde.data(), rcondv.data());
  if (info != 0) throw SolverError("eigenvalue computation failed (dgeevx info " + std::to_string(info) + ")");
  values.resize(n);
  vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    values(j) = {wr[j], wi[j]};
    if (wi[j] == 0.0) {
      for (int i = 0; i < n; ++i) vectors(i, j) = vr[static_cast<size_t>(j) * n + i];
    } else if (wi[j] > 0.0 && j + 1 < n) {
      for (int i = 0; i < n; ++i) {
        const double re = vr[static_cast<size_t>(j) * n + i];
        const double im = vr[static_cast<size_t>(j + 1) * n + i];
        vectors(i, j) = {re, im};
        vectors(i, j + 1) = {re, -im};
      }
      values(j + 1) = {wr[j + 1], wi[j + 1]};
      ++j;
    }
  }
}

LimitCycle analyze_monodromy(Eigen::VectorXd anchor, double period, Eigen::MatrixXd monodromy,
                             const Eigen::VectorXd& tangent, double unit_band) {
  LimitCycle c;
  c.anchor = std::move(anchor);
  c.period = period;
  c.monodromy = std::move(monodromy);
  real_eigen(c.monodromy, c.multipliers, c.eigenvectors);
  const int n = static_cast<int>(c.multipliers.size());

  const double tnorm = tangent.size() == n ? tangent.norm() : 0.0;
  double best = -1.0;
  for (int j = 0; j < n; ++j) {
    double score;
    if (tnorm > 0.0) {
      const Eigen::VectorXcd v = c.eigenvectors.col(j);
      const double vn = v.norm();
      score = vn > 0.0 ? std::abs(v.dot(tangent.cast<std::complex<double>>())) / (vn * tnorm) : 0.0;
      // ties between aligned eigenvectors go to the multiplier nearest 1
      score -= 1e-9 * std::abs(c.multipliers(j) - 1.0);
    } else {
      score = -std::abs(c.multipliers(j) - 1.0);
    }
    if (score > best) {
      best = score;
      c.trivial_index = j;
    }
  }

  int on_circle = 0;
  c.k = 0;
  for (int j = 0; j < n; ++j) {
    const double mod = std::abs(c.multipliers(j));
    if (std::abs(mod - 1.0) <= unit_band) ++on_circle;
    if (j != c.trivial_index && mod < 1.0) ++c.k;
  }
  c.hyperbolic = on_circle == 1 &&
                 std::abs(std::abs(c.multipliers(c.trivial_index)) - 1.0) <= unit_band;
  return c;
}

LimitCycle find_cycle(const AutonomousField& g, const Eigen::VectorXd& z_guess, double omega_guess,
                      const CycleConfig& cfg) {
  const int n = g.dim;
  if (z_guess.size() != n) throw std::invalid_argument("find_cycle: guess has wrong dimension");
  if (!(omega_guess > 0.0) || !std::isfinite(omega_guess))
    throw std::invalid_argument("find_cycle: period guess must be positive");
  cfg.integ.validate();

  Eigen::VectorXd c = g(z_guess);
  const double cn = c.norm();
  if (!(cn > 0.0)) throw SolverError("find_cycle: the field vanishes at the guess");
  c /= cn;

  const RhsFn rhs = g.rhs();
  const JacobianFn jac = g.rhs_jacobian();

  Eigen::VectorXd z = z_guess;
  double omega = omega_guess;

  auto residual = [&](const Eigen::VectorXd& zz, double om, VariationalState* vs_out) {
    VariationalState vs = flow_variational(rhs, jac, n, 0.0, om, zz, cfg.integ);
    Eigen::VectorXd r(n + 1);
    r.head(n) = vs.z - zz;
    r(n) = c.dot(zz - z_guess);
    if (vs_out) *vs_out = std::move(vs);
    return r;
  };

  try {
    VariationalState vs;
    Eigen::VectorXd r = residual(z, omega, &vs);
    int it = 0;
    for (;; ++it) {
      if (!r.allFinite()) throw SolverError("find_cycle: non-finite residual");
      if (r.norm() < cfg.tol) break;
      if (it >= cfg.max_iter)
        throw SolverError("find_cycle: Newton did not converge in " + std::to_string(cfg.max_iter) +
                          " iterations (residual " + std::to_string(r.norm()) + ")");
      Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n + 1, n + 1);
      j.topLeftCorner(n, n) = vs.psi - Eigen::MatrixXd::Identity(n, n);
      j.topRightCorner(n, 1) = g(vs.z);
      j.bottomLeftCorner(1, n) = c.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
      lu.setThreshold(1e-12);
      if (lu.rank() < n + 1) throw SolverError("find_cycle: singular shooting matrix (cycle not isolated?)");
      const Eigen::VectorXd delta = -lu.solve(r);

      // damped update: accept the first step length that reduces the residual
      double lambda = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 12; ++halving, lambda *= 0.5) {
        const Eigen::VectorXd zn = z + lambda * delta.head(n);
        const double on = omega + lambda * delta(n);
        if (!(on > 0.0)) continue;
        VariationalState vs_n;
        Eigen::VectorXd rn;
        try {
          rn = residual(zn, on, &vs_n);
        } catch (const IntegrationError&) {
          continue;
        }
        if (rn.allFinite() && rn.norm() < r.norm()) {
          z = zn;
          omega = on;
          r = rn;
          vs = std::move(vs_n);
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // at the integration noise floor the residual can no longer decrease
        if (r.norm() < 1e3 * cfg.tol && delta.norm() < 1e-10 * (1.0 + z.norm() + omega)) break;
        throw SolverError("find_cycle: Newton step failed to reduce the residual (" +
                          std::to_string(r.norm()) + ")");
      }
    }
    const Eigen::VectorXd gz = g(z);
    if (gz.norm() < 1e-8) throw SolverError("find_cycle: converged to an equilibrium, not a cycle");
    LimitCycle cycle = analyze_monodromy(z, omega, vs.psi, gz, cfg.unit_band);
    cycle.residual = (vs.z - z).norm();
    cycle.iterations = it;
    return cycle;
  } catch (const IntegrationError& e) {
    throw SolverError(std::string("find_cycle: integration failed: ") + e.what());
  }
}

double liouville_det(const AutonomousField& g, const LimitCycle& cycle, const IntegratorConfig& cfg) {
  const int n = g.dim;
  if (cycle.anchor.size() != n || !(cycle.period > 0.0))
    throw std::invalid_argument("liouville_det: invalid cycle");
  auto f = g.eval;
  auto div = g.divergence;
  auto jac = g.jacobian;
  std::vector<double> jbuf(static_cast<size_t>(n) * n);
  RhsFn rhs = [&, n](double, const double* z, double* dz) {
    f(z, dz);
    if (div) {
      dz[n] = div(z);
    } else {
      jac(z, jbuf.data());
      double tr = 0.0;
      for (int i = 0; i < n; ++i) tr += jbuf[static_cast<size_t>(i) * n + i];
      dz[n] = tr;
    }
  };
  Eigen::VectorXd z0(n + 1);
  z0.head(n) = cycle.anchor;
  z0(n) = 0.0;
  const Eigen::VectorXd z1 = flow(rhs, n + 1, 0.0, cycle.period, z0, cfg);
  return std::exp(z1(n));
}

namespace {

int numeric_rank(const Eigen::MatrixXcd& a, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

// Throws when some eigenvalue of `a` carries a Jordan block of size three or more.
void check_jordan(const Eigen::MatrixXd& a, const Eigen::VectorXcd& values) {
  const int n = static_cast<int>(a.rows());
  const double scale = std::max(1.0, a.norm());
  const Eigen::MatrixXcd ac = a.cast<std::complex<double>>();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  std::vector<bool> seen(n, false);
  for (int j = 0; j < n; ++j) {
    if (seen[j]) continue;
    int mult = 0;
    std::complex<double> mean = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(values(i) - values(j)) <= 1e-6 * std::max(1.0, std::abs(values(j)))) {
        seen[i] = true;
        mean += values(i);
        ++mult;
      }
    }
    if (mult < 3) continue;
    mean /= static_cast<double>(mult);
    const Eigen::MatrixXcd d = ac - mean * id;
    const double tol = 1e-7 * scale;
    const int r2 = numeric_rank(d * d, tol * scale);
    const int r3 = numeric_rank(d * d * d, tol * scale * scale);
    if (r2 > r3) throw SolverError("floquet_log: monodromy has a Jordan block larger than 2x2");
  }
}

}  // namespace

FloquetLog floquet_log(const LimitCycle& cycle) {
  const Eigen::MatrixXd& m = cycle.monodromy;
  const int n = static_cast<int>(m.rows());
  if (n == 0 || m.cols() != n || !(cycle.period > 0.0))
    throw std::invalid_argument("floquet_log: invalid cycle");
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  real_eigen(m, values, vectors);
  for (int j = 0; j < n; ++j)
    if (std::abs(values(j)) == 0.0) throw SolverError("floquet_log: singular monodromy");

  FloquetLog out;
  for (int j = 0; j < n; ++j) {
    const auto v = values(j);
    if (v.real() < 0.0 && std::abs(v.imag()) <= 1e-12 * std::abs(v)) out.doubled = true;
  }
  const Eigen::MatrixXd a = out.doubled ? Eigen::MatrixXd(m * m) : m;
  const double w = out.doubled ? 2.0 * cycle.period : cycle.period;
  Eigen::VectorXcd avalues;
  if (out.doubled) {
    real_eigen(a, avalues, vectors);
  } else {
    avalues = values;
  }
  check_jordan(a, avalues);

  const Eigen::MatrixXd l = a.log();
  if (!l.allFinite()) throw SolverError("floquet_log: logarithm failed");
  out.B = l / w;
  const Eigen::MatrixXd back = (w * out.B).exp();
  out.residual = (back - a).norm() / a.norm();
  if (!(out.residual <= 1e-6))
    throw SolverError("floquet_log: round trip residual " + std::to_string(out.residual));
  return out;
}

StabilityClass classify_stability(const LimitCycle& cycle) {
  const int n = static_cast<int>(cycle.multipliers.size());
  StabilityClass s;
  s.k = cycle.k;
  s.attracting = cycle.k == n - 1;
  s.unstable_directions = n - 1 - cycle.k;
  return s;
}

}  // namespace avgtori
