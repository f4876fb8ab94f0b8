#include "avgtori/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "avgtori/bell.hpp"
#include "avgtori/errors.hpp"

namespace avgtori {

namespace {

// 15-point Kronrod rule with its embedded 7-point Gauss rule on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

void check_order(const SystemSpec& spec, int i, const Eigen::VectorXd& z, const char* who) {
  if (i < 1 || i > spec.order())
    throw std::out_of_range(std::string(who) + ": order " + std::to_string(i) + " outside 1.." +
                            std::to_string(spec.order()));
  if (z.size() != spec.dimension()) throw std::invalid_argument(std::string(who) + ": z has wrong dimension");
  if (!z.allFinite()) throw NonFiniteError(std::string(who) + ": non-finite z");
}

// Evaluation context of the recursion at one z. y_j(s) is the cumulative sum of
// the panels of an adaptive partition of [0, horizon] plus one Kronrod rule on
// the partial panel; every y_j(s) is memoized.
class Recursion {
 public:
  Recursion(const SystemSpec& spec, const Eigen::VectorXd& z, double horizon, const QuadConfig& quad)
      : spec_(spec),
        z_(z),
        n_(spec.dimension()),
        horizon_(horizon),
        quad_(quad),
        lead_(leading_zero_orders(spec)),
        tables_(spec.order() + 1),
        memo_(spec.order() + 1) {}

  Eigen::VectorXd y(int j, double s) {
    if (j <= lead_ || s == 0.0) return Eigen::VectorXd::Zero(n_);
    auto& memo = memo_[j];
    if (auto it = memo.find(s); it != memo.end()) return it->second;
    Table& tab = tables_[j];
    if (!tab.built) build(j);
    Eigen::VectorXd out;
    if (s >= horizon_) {
      out = tab.cum.back();
    } else {
      const auto k = static_cast<size_t>(std::upper_bound(tab.a.begin(), tab.a.end(), s) - tab.a.begin()) - 1;
      out = tab.cum[k];
      if (s > tab.a[k]) {
        double err = 0.0;
        out += kronrod(j, tab.a[k], s, &err);
      }
    }
    memo.emplace(s, out);
    return out;
  }

 private:
  struct Table {
    bool built = false;
    std::vector<double> a;             // panel left ends
    std::vector<Eigen::VectorXd> cum;  // cum[k] = integral over [0, a[k]]; cum.back() covers [0, horizon]
  };
  struct Panel {
    double a, b;
    Eigen::VectorXd val;
    double err;
  };

  Eigen::VectorXd integrand(int i, double s) {
    const double fi = factorial(i);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    if (!spec_.order_is_zero(i)) out = fi * spec_.eval_order(i, s, z_);
    std::vector<Eigen::VectorXd> ys;  // ys[k-1] = y_k(s), filled on demand
    std::vector<bool> ys_zero;
    const auto& table = bell::shared_table();
    for (int j = 1; j < i; ++j) {
      const int q = i - j;
      if (spec_.order_is_zero(q) || j <= lead_) continue;
      while (static_cast<int>(ys.size()) < j) {
        ys.push_back(y(static_cast<int>(ys.size()) + 1, s));
        ys_zero.push_back(ys.back().isZero(0.0));
      }
      const double scale = fi / factorial(j);
      for (int m = 1; m <= j; ++m) {
        for (const auto& term : table.terms(j, m)) {
          bool skip = false;
          std::vector<Eigen::VectorXd> dirs;
          dirs.reserve(term.indices.size());
          for (int idx : term.indices) {
            if (ys_zero[idx - 1]) {
              skip = true;
              break;
            }
            dirs.push_back(ys[idx - 1]);
          }
          if (skip) continue;
          out += (scale * static_cast<double>(term.coeff)) * spec_.derivative_tensor(q, m, s, z_, dirs);
        }
      }
    }
    if (!out.allFinite()) throw NonFiniteError("melnikov: non-finite integrand at s = " + std::to_string(s));
    return out;
  }

  Eigen::VectorXd kronrod(int j, double a, double b, double* err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    Eigen::VectorXd k = Eigen::VectorXd::Zero(n_), g = Eigen::VectorXd::Zero(n_);
    const Eigen::VectorXd fc = integrand(j, c);
    k += kWgk[7] * fc;
    g += kWg[3] * fc;
    for (int p = 0; p < 7; ++p) {
      const Eigen::VectorXd f1 = integrand(j, c - h * kXgk[p]);
      const Eigen::VectorXd f2 = integrand(j, c + h * kXgk[p]);
      k += kWgk[p] * (f1 + f2);
      if (p % 2 == 1) g += kWg[p / 2] * (f1 + f2);
    }
    k *= h;
    g *= h;
    *err = (k - g).cwiseAbs().maxCoeff();
    return k;
  }

  void build(int j) {
    std::vector<Panel> panels;
    constexpr int kInitial = 4;
    double total = 0.0;
    for (int p = 0; p < kInitial; ++p) {
      Panel pn{horizon_ * p / kInitial, horizon_ * (p + 1) / kInitial, {}, 0.0};
      pn.val = kronrod(j, pn.a, pn.b, &pn.err);
      total += pn.err;
      panels.push_back(std::move(pn));
    }
    while (total > quad_.abs_tol) {
      if (static_cast<int>(panels.size()) >= quad_.max_panels)
        throw SolverError("melnikov: quadrature did not converge for order " + std::to_string(j) +
                          " (error estimate " + std::to_string(total) + ")");
      const auto worst = std::max_element(panels.begin(), panels.end(),
                                          [](const Panel& x, const Panel& y) { return x.err < y.err; });
      const double a = worst->a, b = worst->b, mid = 0.5 * (a + b);
      total -= worst->err;
      Panel left{a, mid, {}, 0.0}, right{mid, b, {}, 0.0};
      left.val = kronrod(j, a, mid, &left.err);
      right.val = kronrod(j, mid, b, &right.err);
      total += left.err + right.err;
      *worst = std::move(left);
      panels.push_back(std::move(right));
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    Table& tab = tables_[j];
    tab.a.clear();
    tab.cum.clear();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_);
    for (const auto& p : panels) {
      tab.a.push_back(p.a);
      tab.cum.push_back(acc);
      acc += p.val;
    }
    tab.cum.push_back(acc);
    tab.built = true;
  }

  const SystemSpec& spec_;
  Eigen::VectorXd z_;
  int n_;
  double horizon_;
  QuadConfig quad_;
  int lead_;
  std::vector<Table> tables_;
  std::vector<std::unordered_map<double, Eigen::VectorXd>> memo_;
};

}  // namespace

int leading_zero_orders(const SystemSpec& spec) {
  int a = 0;
  while (a < spec.order() && spec.order_is_zero(a + 1)) ++a;
  return a;
}

Eigen::VectorXd y_function(const SystemSpec& spec, int i, double t, const Eigen::VectorXd& z, const QuadConfig& quad) {
  check_order(spec, i, z, "y_function");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("y_function: t must be finite and >= 0");
  if (t == 0.0) return Eigen::VectorXd::Zero(spec.dimension());
  Recursion rec(spec, z, t, quad);
  return rec.y(i, t);
}

std::vector<Eigen::VectorXd> melnikov_all(const SystemSpec& spec, int i, const Eigen::VectorXd& z,
                                          const QuadConfig& quad) {
  check_order(spec, i, z, "melnikov_f");
  Recursion rec(spec, z, spec.period(), quad);
  std::vector<Eigen::VectorXd> out;
  for (int k = 1; k <= i; ++k) out.push_back(rec.y(k, spec.period()) / factorial(k));
  return out;
}

Eigen::VectorXd melnikov_f(const SystemSpec& spec, int i, const Eigen::VectorXd& z, const QuadConfig& quad) {
  check_order(spec, i, z, "melnikov_f");
  Recursion rec(spec, z, spec.period(), quad);
  return rec.y(i, spec.period()) / factorial(i);
}

Eigen::VectorXd jet_oracle_f(const SystemSpec& spec, int i, const Eigen::VectorXd& z, const IntegratorConfig& cfg) {
  check_order(spec, i, z, "jet_oracle_f");
  return flow_jet(spec, 0.0, spec.period(), z, cfg).extract(i);
}

double lower_order_defect(const SystemSpec& spec, int l, const VanishingGrid& grid, const QuadConfig& quad) {
  if (l < 1 || l > spec.order()) throw std::out_of_range("averaged_g: order outside 1..N");
  const int lead = leading_zero_orders(spec);
  if (l - 1 <= lead) return 0.0;
  if (grid.per_dim < 1 || !(grid.hi >= grid.lo)) throw std::invalid_argument("averaged_g: invalid sample grid");
  const int n = spec.dimension();
  std::vector<int> idx(n, 0);
  Eigen::VectorXd z(n);
  double worst = 0.0;
  for (;;) {
    for (int c = 0; c < n; ++c)
      z(c) = grid.per_dim == 1 ? 0.5 * (grid.lo + grid.hi)
                               : grid.lo + (grid.hi - grid.lo) * idx[c] / (grid.per_dim - 1);
    const auto fs = melnikov_all(spec, l - 1, z, quad);
    for (const auto& f : fs) worst = std::max(worst, f.cwiseAbs().maxCoeff());
    if (worst > grid.threshold) return worst;
    int c = 0;
    while (c < n && ++idx[c] == grid.per_dim) idx[c++] = 0;
    if (c == n) break;
  }
  return worst;
}

AveragedField::AveragedField(const SystemSpec& spec, int l, const VanishingGrid& grid, const QuadConfig& quad)
    : spec_(&spec), l_(l), quad_(quad) {
  if (l < 1 || l > spec.order()) throw std::out_of_range("averaged_g: order outside 1..N");
  defect_ = lower_order_defect(spec, l, grid, quad);
  if (defect_ > grid.threshold)
    throw HypothesisError("averaged_g: lower-order Melnikov functions do not vanish (max |f_j| = " +
                          std::to_string(defect_) + " for some j < " + std::to_string(l) +
                          "); g_l is only available when f_1 = ... = f_{l-1} = 0");
}

Eigen::VectorXd AveragedField::operator()(const Eigen::VectorXd& z) const {
  return melnikov_f(*spec_, l_, z, quad_) / spec_->period();
}

AutonomousField AveragedField::autonomous() const {
  const SystemSpec* spec = spec_;
  const int l = l_;
  const int n = spec->dimension();
  const QuadConfig quad = quad_;
  AutonomousField g;
  g.dim = n;
  const bool direct = l <= 2 * leading_zero_orders(*spec) + 1;
  if (direct) {
    // f_l reduces to the integral of F_l: average F_l and dF_l with the periodic trapezoid rule
    auto average = [spec, l, n](const double* zp, double* out, double* jac) {
      const Eigen::Map<const Eigen::VectorXd> z(zp, n);
      const double T = spec->period();
      std::vector<Eigen::VectorXd> units;
      for (int k = 0; k < n; ++k) units.push_back(Eigen::VectorXd::Unit(n, k));
      auto sample = [&](int m, Eigen::VectorXd& v, Eigen::MatrixXd& j, int offset, int stride) {
        for (int q = offset; q < m; q += stride) {
          const double s = T * q / m;
          v += spec->eval_order(l, s, z);
          if (jac) {
            for (int k = 0; k < n; ++k)
              j.col(k) += spec->derivative_tensor(l, 1, s, z, std::span<const Eigen::VectorXd>(&units[k], 1));
          }
        }
      };
      int m = 32;
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd jsum = Eigen::MatrixXd::Zero(n, n);
      sample(m, sum, jsum, 0, 1);
      Eigen::VectorXd avg = sum / m;
      Eigen::MatrixXd javg = jsum / m;
      for (;;) {
        // refine by adding the midpoints of the current grid
        sample(2 * m, sum, jsum, 1, 2);
        m *= 2;
        const Eigen::VectorXd avg2 = sum / m;
        const Eigen::MatrixXd javg2 = jsum / m;
        const double dv = (avg2 - avg).cwiseAbs().maxCoeff();
        const double dj = jac ? (javg2 - javg).cwiseAbs().maxCoeff() : 0.0;
        avg = avg2;
        javg = javg2;
        if (dv <= 1e-14 * (1.0 + avg.cwiseAbs().maxCoeff()) && dj <= 1e-13 * (1.0 + javg.cwiseAbs().maxCoeff()))
          break;
        if (m >= (1 << 16)) throw SolverError("averaged field: trapezoid average did not converge");
      }
      Eigen::Map<Eigen::VectorXd>(out, n) = avg;
      if (jac) Eigen::Map<Eigen::MatrixXd>(jac, n, n) = javg;
    };
    g.eval = [average](const double* z, double* out) { average(z, out, nullptr); };
    g.jacobian = [average, n](const double* z, double* jac) {
      std::vector<double> tmp(n);
      average(z, tmp.data(), jac);
    };
  } else {
    auto value = [spec, l, quad, n](const Eigen::VectorXd& z) {
      return Eigen::VectorXd(melnikov_f(*spec, l, z, quad) / spec->period());
    };
    g.eval = [value, n](const double* z, double* out) {
      Eigen::Map<Eigen::VectorXd>(out, n) = value(Eigen::Map<const Eigen::VectorXd>(z, n));
    };
    g.jacobian = [value, n](const double* zp, double* jac) {
      Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zp, n);
      Eigen::Map<Eigen::MatrixXd> j(jac, n, n);
      for (int k = 0; k < n; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(z(k)));
        const double zk = z(k);
        z(k) = zk + h;
        const Eigen::VectorXd fp = value(z);
        z(k) = zk - h;
        const Eigen::VectorXd fm = value(z);
        z(k) = zk;
        j.col(k) = (fp - fm) / (2.0 * h);
      }
    };
  }
  return g;
}

Eigen::VectorXd averaged_g(const SystemSpec& spec, int l, const Eigen::VectorXd& z, const QuadConfig& quad,
                           const VanishingGrid& grid) {
  return AveragedField(spec, l, grid, quad)(z);
}

}  // namespace avgtori
