#include "avgtori/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "avgtori/system.hpp"

namespace avgtori {

IntegratorConfig IntegratorConfig::adaptive(double abs_tol, double rel_tol) {
  IntegratorConfig c;
  c.method = Method::RK45;
  c.abs_tol = abs_tol;
  c.rel_tol = rel_tol;
  return c;
}

IntegratorConfig IntegratorConfig::fixed(double step) {
  IntegratorConfig c;
  c.method = Method::RK4;
  c.step = step;
  return c;
}

void IntegratorConfig::validate() const {
  if (method == Method::RK45 && !(abs_tol > 0.0 && rel_tol > 0.0))
    throw std::invalid_argument("integrator tolerances must be positive");
  if (method == Method::RK4 && !(step > 0.0)) throw std::invalid_argument("fixed step must be positive");
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (!(blowup > 0.0)) throw std::invalid_argument("blow-up bound must be positive");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Integrator::Integrator(int dim, RhsFn rhs, IntegratorConfig cfg)
    : dim_(dim), rhs_(std::move(rhs)), cfg_(cfg) {
  cfg_.validate();
  if (dim_ < 1) throw std::invalid_argument("integrator dimension must be positive");
  for (auto& k : k_) k.assign(static_cast<std::size_t>(dim_), 0.0);
  tmp_.assign(static_cast<std::size_t>(dim_), 0.0);
  err_.assign(static_cast<std::size_t>(dim_), 0.0);
}

void Integrator::check_state(double t, const double* z) const {
  for (int i = 0; i < dim_; ++i) {
    if (!std::isfinite(z[i])) throw BlowUpError("non-finite state at t=" + std::to_string(t), t);
    if (std::abs(z[i]) > cfg_.blowup)
      throw BlowUpError("state exceeded blow-up bound at t=" + std::to_string(t), t);
  }
}

double Integrator::attempt(double t, const double* z, double h, double* out, bool want_error) {
  const int n = dim_;
  double* k1 = k_[0].data();
  double* k2 = k_[1].data();
  double* k3 = k_[2].data();
  double* k4 = k_[3].data();
  double* k5 = k_[4].data();
  double* k6 = k_[5].data();
  double* k7 = k_[6].data();
  double* y = tmp_.data();
  if (!k1_valid_) {
    rhs_(t, z, k1);
    k1_valid_ = true;
  }
  if (cfg_.method == Method::RK4) {
    for (int i = 0; i < n; ++i) y[i] = z[i] + 0.5 * h * k1[i];
    rhs_(t + 0.5 * h, y, k2);
    for (int i = 0; i < n; ++i) y[i] = z[i] + 0.5 * h * k2[i];
    rhs_(t + 0.5 * h, y, k3);
    for (int i = 0; i < n; ++i) y[i] = z[i] + h * k3[i];
    rhs_(t + h, y, k4);
    for (int i = 0; i < n; ++i) out[i] = z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return 0.0;
  }
  for (int i = 0; i < n; ++i) y[i] = z[i] + h * a21 * k1[i];
  rhs_(t + c2 * h, y, k2);
  for (int i = 0; i < n; ++i) y[i] = z[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs_(t + c3 * h, y, k3);
  for (int i = 0; i < n; ++i) y[i] = z[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs_(t + c4 * h, y, k4);
  for (int i = 0; i < n; ++i) y[i] = z[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  rhs_(t + c5 * h, y, k5);
  for (int i = 0; i < n; ++i)
    y[i] = z[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  rhs_(t + h, y, k6);
  for (int i = 0; i < n; ++i)
    out[i] = z[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  if (!want_error) return 0.0;
  rhs_(t + h, out, k7);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(z[i]), std::abs(out[i]));
    acc += (e / sc) * (e / sc);
  }
  const double err = std::sqrt(acc / n);
  return std::isfinite(err) ? err : 1e10;
}

double Integrator::initial_step(double t0, const double* z0, double direction) {
  // Hairer-Norsett-Wanner starting step heuristic.
  const int n = dim_;
  if (!k1_valid_) {
    rhs_(t0, z0, k_[0].data());
    k1_valid_ = true;
  }
  double d0 = 0.0, d1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(z0[i]);
    d0 += (z0[i] / sc) * (z0[i] / sc);
    d1 += (k_[0][static_cast<std::size_t>(i)] / sc) * (k_[0][static_cast<std::size_t>(i)] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1 = std::sqrt(d1 / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  std::vector<double> y(static_cast<std::size_t>(n)), f1(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = z0[i] + direction * h0 * k_[0][static_cast<std::size_t>(i)];
  rhs_(t0 + direction * h0, y.data(), f1.data());
  double d2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(z0[i]);
    const double v = (f1[static_cast<std::size_t>(i)] - k_[0][static_cast<std::size_t>(i)]) / sc;
    d2 += v * v;
  }
  d2 = std::sqrt(d2 / n) / h0;
  const double m = std::max(d1, d2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

Eigen::VectorXd Integrator::advance(double t0, double t1, const Eigen::VectorXd& z0) {
  return advance(t0, t1, z0, nullptr);
}

Eigen::VectorXd Integrator::advance(double t0, double t1, const Eigen::VectorXd& z0,
                                    const std::function<void(double, const double*)>& observer) {
  if (z0.size() != dim_) throw std::invalid_argument("initial state dimension mismatch");
  check_state(t0, z0.data());
  Eigen::VectorXd z = z0;
  if (t1 == t0) return z;
  Eigen::VectorXd out(dim_);
  k1_valid_ = false;
  const double direction = t1 > t0 ? 1.0 : -1.0;

  if (cfg_.method == Method::RK4) {
    const double span = std::abs(t1 - t0);
    const auto n = static_cast<long>(std::ceil(span / cfg_.step - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(n);
    if (n > cfg_.max_steps) throw IntegrationError("fixed-step budget exceeded");
    for (long s = 0; s < n; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      k1_valid_ = false;
      attempt(t, z.data(), h, out.data(), false);
      z.swap(out);
      ++steps_;
      const double tn = s + 1 == n ? t1 : t0 + static_cast<double>(s + 1) * h;
      check_state(tn, z.data());
      if (observer) observer(tn, z.data());
    }
    return z;
  }

  double t = t0;
  double h = direction * initial_step(t0, z.data(), direction);
  long attempts = 0;
  for (;;) {
    bool last = false;
    if ((t + h - t1) * direction >= 0.0) {
      h = t1 - t;
      last = true;
    }
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("step size underflow at t=" + std::to_string(t));
    if (++attempts > cfg_.max_steps) throw IntegrationError("step budget exceeded");
    const double err = attempt(t, z.data(), h, out.data(), true);
    if (err <= 1.0) {
      t = last ? t1 : t + h;
      z.swap(out);
      std::swap(k_[0], k_[6]);
      ++steps_;
      check_state(t, z.data());
      if (observer) observer(t, z.data());
      if (last) return z;
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
}

Integrator::Crossing Integrator::advance_to_section(double t0, const Eigen::VectorXd& z0,
                                                    const SectionFn& section, const GateFn& gate,
                                                    double t_max, double time_tol) {
  if (z0.size() != dim_) throw std::invalid_argument("initial state dimension mismatch");
  check_state(t0, z0.data());
  Eigen::VectorXd z = z0, out(dim_), probe(dim_);
  k1_valid_ = false;
  double t = t0;
  double s_prev = section(z.data());
  const bool fixed = cfg_.method == Method::RK4;
  double h = fixed ? cfg_.step : initial_step(t0, z.data(), 1.0);
  long attempts = 0;
  while (t < t_max) {
    if (++attempts > cfg_.max_steps) throw IntegrationError("step budget exceeded");
    const double err = attempt(t, z.data(), h, out.data(), !fixed);
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow");
      continue;
    }
    const double s_new = section(out.data());
    bool k7_fresh = !fixed;
    if (s_prev < 0.0 && s_new >= 0.0) {
      k7_fresh = false;
      // Bisection on the sub-step length; k1 still belongs to the base point.
      double lo = 0.0, hi = h;
      while (hi - lo > time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        attempt(t, z.data(), mid, probe.data(), false);
        if (section(probe.data()) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      attempt(t, z.data(), hi, probe.data(), false);
      if (gate(probe.data())) {
        check_state(t + hi, probe.data());
        ++steps_;
        return {t + hi, probe};
      }
    }
    // accept the full step
    if (fixed) {
      k1_valid_ = false;
    } else {
      if (!k7_fresh) rhs_(t + h, out.data(), k_[6].data());
      std::swap(k_[0], k_[6]);
    }
    t += h;
    z.swap(out);
    s_prev = s_new;
    ++steps_;
    check_state(t, z.data());
    if (!fixed) h *= err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
  }
  throw IntegrationError("no return to the section before t=" + std::to_string(t_max));
}

Eigen::VectorXd flow(const RhsFn& field, int dim, double t0, double t1, const Eigen::VectorXd& z0,
                     const IntegratorConfig& cfg) {
  Integrator integ(dim, field, cfg);
  return integ.advance(t0, t1, z0);
}

VariationalState flow_variational(const RhsFn& field, const JacobianFn& jacobian, int dim, double t0,
                                  double t1, const Eigen::VectorXd& z0, const IntegratorConfig& cfg) {
  const int n = dim;
  std::vector<double> jac(static_cast<std::size_t>(n * n));
  RhsFn aug = [&, n](double t, const double* y, double* dy) {
    field(t, y, dy);
    jacobian(t, y, jac.data());
    Eigen::Map<const Eigen::MatrixXd> J(jac.data(), n, n);
    Eigen::Map<const Eigen::MatrixXd> psi(y + n, n, n);
    Eigen::Map<Eigen::MatrixXd> dpsi(dy + n, n, n);
    dpsi.noalias() = J * psi;
  };
  Eigen::VectorXd y0(n + n * n);
  y0.head(n) = z0;
  Eigen::Map<Eigen::MatrixXd>(y0.data() + n, n, n).setIdentity();
  IntegratorConfig c = cfg;
  c.blowup = std::numeric_limits<double>::infinity();
  Integrator integ(n + n * n, aug, c);
  // blow-up applies to the base trajectory only
  const Eigen::VectorXd y1 = integ.advance(t0, t1, y0, [&](double t, const double* y) {
    for (int i = 0; i < n; ++i)
      if (std::abs(y[i]) > cfg.blowup) throw BlowUpError("state exceeded blow-up bound", t);
  });
  return {y1.head(n), Eigen::Map<const Eigen::MatrixXd>(y1.data() + n, n, n)};
}

RhsFn system_rhs(const SystemSpec& spec, double eps) {
  return [&spec, eps](double t, const double* z, double* dz) { spec.field(eps, t, z, dz); };
}

JacobianFn system_jacobian(const SystemSpec& spec, double eps) {
  return [&spec, eps](double t, const double* z, double* jac) {
    const int n = spec.dimension();
    const Eigen::MatrixXd J = spec.field_jacobian(eps, t, Eigen::Map<const Eigen::VectorXd>(z, n));
    Eigen::Map<Eigen::MatrixXd>(jac, n, n) = J;
  };
}

EpsJet flow_jet(const SystemSpec& spec, double t0, double t1, const Eigen::VectorXd& z0,
                const IntegratorConfig& cfg) {
  const int n = spec.dimension();
  const int order = spec.order();
  if (z0.size() != n) throw std::invalid_argument("flow_jet: state dimension mismatch");
  RhsFn rhs = [&spec, n, order](double t, const double* c, double* dc) {
    std::vector<Series> x;
    x.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      std::vector<double> coeffs(static_cast<std::size_t>(order + 1));
      for (int k = 0; k <= order; ++k) coeffs[static_cast<std::size_t>(k)] = c[k * n + j];
      x.emplace_back(std::move(coeffs));
    }
    const Series ts(t, order);
    for (int k = 0; k < (order + 1) * n; ++k) dc[k] = 0.0;
    for (int i = 1; i <= order; ++i) {
      if (spec.order_is_zero(i)) continue;
      const auto vals = spec.eval_order_series(i, ts, x);
      for (int j = 0; j < n; ++j)
        for (int k = i; k <= order; ++k) dc[k * n + j] += vals[static_cast<std::size_t>(j)][k - i];
    }
  };
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero((order + 1) * n);
  c0.head(n) = z0;
  const Eigen::VectorXd c1 = flow(rhs, (order + 1) * n, t0, t1, c0, cfg);
  std::vector<Eigen::VectorXd> coeffs;
  for (int k = 0; k <= order; ++k) coeffs.push_back(c1.segment(k * n, n));
  return EpsJet(std::move(coeffs));
}

}  // namespace avgtori
