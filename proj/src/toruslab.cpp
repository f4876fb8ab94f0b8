#include "avgtori/toruslab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "avgtori/errors.hpp"
#include "avgtori/melnikov.hpp"

namespace avgtori {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kCache = 1024;

// Fourier basis row [1, cos phi, sin phi, ..., cos H phi, sin H phi].
void basis(double phi, int h, double* row) {
  row[0] = 1.0;
  const double c1 = std::cos(phi), s1 = std::sin(phi);
  double c = c1, s = s1;
  for (int k = 1; k <= h; ++k) {
    row[2 * k - 1] = c;
    row[2 * k] = s;
    const double cn = c * c1 - s * s1;
    s = s * c1 + c * s1;
    c = cn;
  }
}

double wrap_turn(double d) {
  d -= std::round(d);
  return d;
}

}  // namespace

SectionMap::SectionMap(std::string name, int dim, double eps, Step step)
    : name_(std::move(name)), dim_(dim), eps_(eps), step_(std::move(step)) {
  if (dim < 1) throw std::invalid_argument("SectionMap: dimension must be positive");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("SectionMap: eps must be finite and >= 0");
  if (!step_) throw std::invalid_argument("SectionMap: empty step function");
}

Eigen::VectorXd SectionMap::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("SectionMap: point has wrong dimension");
  return step_(x);
}

SectionMap stroboscopic_map(std::shared_ptr<const SystemSpec> spec, double eps, IntegratorConfig cfg) {
  if (!spec) throw std::invalid_argument("stroboscopic_map: null system");
  cfg.validate();
  const int n = spec->dimension();
  const double period = spec->period();
  auto integ = std::make_shared<Integrator>(n, system_rhs(*spec, eps), cfg);
  return SectionMap(spec->name() + "/stroboscopic", n, eps,
                    [spec, integ, period](const Eigen::VectorXd& x) { return integ->advance(0.0, period, x); });
}

std::vector<Eigen::VectorXd> poincare_iterate(const SectionMap& map, const Eigen::VectorXd& x0, long count) {
  if (count < 1) throw std::invalid_argument("poincare_iterate: count must be at least 1");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(count));
  Eigen::VectorXd x = x0;
  for (long i = 1; i <= count; ++i) {
    try {
      x = map(x);
    } catch (const EscapeError&) {
      throw;
    } catch (const IntegrationError& e) {
      throw EscapeError(std::string("orbit escaped at iterate ") + std::to_string(i) + ": " + e.what(), i);
    } catch (const ValidityError& e) {
      throw EscapeError(std::string("orbit escaped at iterate ") + std::to_string(i) + ": " + e.what(), i);
    } catch (const NonFiniteError& e) {
      throw EscapeError(std::string("orbit escaped at iterate ") + std::to_string(i) + ": " + e.what(), i);
    }
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------

ClosedCurve::ClosedCurve(Eigen::VectorXd center, Eigen::VectorXd e1, Eigen::VectorXd e2, Eigen::MatrixXd coeffs)
    : center_(std::move(center)), e1_(std::move(e1)), e2_(std::move(e2)), coeffs_(std::move(coeffs)) {
  const auto d = center_.size();
  if (d < 2 || e1_.size() != d || e2_.size() != d || coeffs_.rows() != d || coeffs_.cols() < 1 ||
      coeffs_.cols() % 2 != 1)
    throw std::invalid_argument("ClosedCurve: inconsistent shapes");
  cache_.resize(d, kCache);
  for (int j = 0; j < kCache; ++j) cache_.col(j) = point(kTwoPi * j / kCache);
}

Eigen::VectorXd ClosedCurve::point(double phi) const {
  const int h = harmonics();
  Eigen::VectorXd row(2 * h + 1);
  basis(phi, h, row.data());
  return coeffs_ * row;
}

Eigen::VectorXd ClosedCurve::derivative(double phi) const {
  const int h = harmonics();
  Eigen::VectorXd row(2 * h + 1);
  basis(phi, h, row.data());
  Eigen::VectorXd d(2 * h + 1);
  d(0) = 0.0;
  for (int k = 1; k <= h; ++k) {
    d(2 * k - 1) = -k * row(2 * k);
    d(2 * k) = k * row(2 * k - 1);
  }
  return coeffs_ * d;
}

double ClosedCurve::angle_of(const Eigen::VectorXd& p) const {
  const Eigen::VectorXd q = p - center_;
  double a = std::atan2(q.dot(e2_), q.dot(e1_));
  if (a < 0.0) a += kTwoPi;
  return a;
}

double ClosedCurve::distance(const Eigen::VectorXd& p, double* phi_out) const {
  if (p.size() != center_.size()) throw std::invalid_argument("ClosedCurve: point has wrong dimension");
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int j = 0; j < kCache; ++j) {
    const double d2 = (cache_.col(j) - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  // golden-section refinement on the bracket of the two neighbouring samples
  const double step = kTwoPi / kCache;
  double a = (best - 1) * step, b = (best + 1) * step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double phi) { return (point(phi) - p).squaredNorm(); };
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  double phi = 0.5 * (a + b);
  double d2 = f(phi);
  if (best_d2 < d2) {
    d2 = best_d2;
    phi = best * step;
  }
  if (phi_out) *phi_out = std::fmod(phi + kTwoPi, kTwoPi);
  return std::sqrt(d2);
}

std::vector<Eigen::VectorXd> ClosedCurve::sample(int m) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) out.push_back(point(kTwoPi * j / m));
  return out;
}

bool ClosedCurve::angularly_ordered(int m) const {
  double total = 0.0;
  double prev = angle_of(point(0.0));
  for (int j = 1; j <= m; ++j) {
    const double a = angle_of(point(kTwoPi * j / m));
    double d = a - prev;
    if (d > std::numbers::pi) d -= kTwoPi;
    if (d < -std::numbers::pi) d += kTwoPi;
    if (!(d > 0.0)) return false;
    total += d;
    prev = a;
  }
  return std::abs(total - kTwoPi) < 1e-6;
}

Eigen::VectorXd ClosedCurve::harmonic_amplitudes() const {
  const int h = harmonics();
  Eigen::VectorXd amp(h + 1);
  amp(0) = coeffs_.col(0).norm();
  for (int k = 1; k <= h; ++k)
    amp(k) = std::sqrt(0.5 * (coeffs_.col(2 * k - 1).squaredNorm() + coeffs_.col(2 * k).squaredNorm()));
  return amp;
}

double hausdorff(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff: empty point set");
  auto directed = [](const std::vector<Eigen::VectorXd>& x, const std::vector<Eigen::VectorXd>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, (p - q).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

// ---------------------------------------------------------------------------

TorusEstimate fit_torus(const SectionMap& map, const std::vector<std::vector<Eigen::VectorXd>>& orbits,
                        const TorusOptions& opts) {
  if (opts.harmonics < 1 || opts.bins < 4 || opts.roughness < 0.0 || opts.residual_samples < 1 ||
      opts.curve_samples < 8 || opts.stride < 1)
    throw std::invalid_argument("fit_torus: invalid options");
  const int d = map.dim();
  if (d < 2) throw std::invalid_argument("fit_torus: the section must be at least two-dimensional");
  std::vector<const Eigen::VectorXd*> pts;
  for (const auto& orb : orbits)
    for (const auto& p : orb) {
      if (p.size() != d) throw std::invalid_argument("fit_torus: point has wrong dimension");
      pts.push_back(&p);
    }
  const int h = opts.harmonics;
  const int nb = 2 * h + 1;
  if (pts.size() < static_cast<size_t>(nb)) throw DetectionError("fit_torus: too few points for the fit");

  // centre and plane of the angular parameter
  const auto& plane_pts = opts.reference;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (!plane_pts.empty()) {
    for (const auto& p : plane_pts) center += p;
    center /= static_cast<double>(plane_pts.size());
    for (const auto& p : plane_pts) cov += (p - center) * (p - center).transpose();
  } else {
    for (const auto* p : pts) center += *p;
    center /= static_cast<double>(pts.size());
    for (const auto* p : pts) cov += (*p - center) * (*p - center).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd e1 = es.eigenvectors().col(d - 1);
  Eigen::VectorXd e2 = es.eigenvectors().col(d - 2);

  auto angle = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd q = p - center;
    return std::atan2(q.dot(e2), q.dot(e1));
  };
  // orient the parameter along the direction of motion
  double drift = 0.0;
  for (const auto& orb : orbits) {
    for (size_t i = 1; i < orb.size(); ++i) {
      double da = angle(orb[i]) - angle(orb[i - 1]);
      if (da > std::numbers::pi) da -= kTwoPi;
      if (da < -std::numbers::pi) da += kTwoPi;
      drift += da;
    }
  }
  if (drift < 0.0) e2 = -e2;

  // periodic angular binning: each occupied bin carries the same total weight
  std::vector<double> phi(pts.size());
  std::vector<int> bin(pts.size()), count(opts.bins, 0);
  for (size_t i = 0; i < pts.size(); ++i) {
    double a = angle(*pts[i]);
    if (a < 0.0) a += kTwoPi;
    phi[i] = a;
    bin[i] = std::min(opts.bins - 1, static_cast<int>(a / kTwoPi * opts.bins));
    ++count[bin[i]];
  }
  const int occupied = static_cast<int>(std::count_if(count.begin(), count.end(), [](int c) { return c > 0; }));

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nb, d);
  Eigen::VectorXd row(nb);
  for (size_t i = 0; i < pts.size(); ++i) {
    const double w = 1.0 / (count[bin[i]] * static_cast<double>(occupied));
    basis(phi[i], h, row.data());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    rhs += w * row * pts[i]->transpose();
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  for (int k = 1; k <= h; ++k) {
    const double pen = opts.roughness * std::pow(static_cast<double>(k), 4);
    gram(2 * k - 1, 2 * k - 1) += pen;
    gram(2 * k, 2 * k) += pen;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw DetectionError("fit_torus: singular least-squares system");
  const Eigen::MatrixXd sol = ldlt.solve(rhs);
  if (!sol.allFinite()) throw DetectionError("fit_torus: least-squares solution is not finite");

  TorusEstimate est;
  est.eps = map.eps();
  est.curve = ClosedCurve(center, e1, e2, sol.transpose());
  est.iterates_used = static_cast<long>(pts.size());
  for (const auto& orb : orbits)
    if (!orb.empty()) est.tail.push_back(orb.back());

  for (const auto* p : pts) est.tube = std::max(est.tube, est.curve.distance(*p));

  for (int j = 0; j < opts.residual_samples; ++j) {
    const Eigen::VectorXd c = est.curve.point(kTwoPi * j / opts.residual_samples);
    est.invariance_residual = std::max(est.invariance_residual, est.curve.distance(map(c)));
  }
  if (!plane_pts.empty()) est.distance_to_unperturbed = hausdorff(est.curve.sample(opts.curve_samples), plane_pts);

  if (!est.curve.angularly_ordered())
    throw DetectionError("fit_torus: fitted curve is not angularly ordered around its centre (residual " +
                         std::to_string(est.invariance_residual) + ", tube " + std::to_string(est.tube) + ")");
  return est;
}

TorusEstimate detect_torus(const SectionMap& map, const std::vector<Eigen::VectorXd>& seeds, long transient,
                           long keep, const TorusOptions& opts) {
  if (seeds.empty()) throw std::invalid_argument("detect_torus: no seeds");
  if (transient < 0 || keep < 1) throw std::invalid_argument("detect_torus: invalid iterate counts");
  std::vector<std::vector<Eigen::VectorXd>> orbits;
  int escaped = 0;
  for (const auto& seed : seeds) {
    try {
      Eigen::VectorXd x = seed;
      if (transient > 0) x = poincare_iterate(map, x, transient).back();
      std::vector<Eigen::VectorXd> orb;
      for (long i = 0; i < keep; i += opts.stride) {
        const long chunk = std::min(opts.stride, keep - i);
        x = poincare_iterate(map, x, chunk).back();
        if (chunk == opts.stride) orb.push_back(x);
      }
      orbits.push_back(std::move(orb));
    } catch (const EscapeError&) {
      ++escaped;
    }
  }
  if (orbits.empty()) throw DetectionError("detect_torus: all seeds escaped");
  TorusEstimate est = fit_torus(map, orbits, opts);
  est.seeds_used = static_cast<int>(orbits.size());
  est.seeds_escaped = escaped;
  return est;
}

std::vector<Eigen::VectorXd> straddle_orbit(const SectionMap& map, const Eigen::VectorXd& seed,
                                            const Eigen::VectorXd& direction, double width, double escape,
                                            long count) {
  if (!(width > 0.0) || !(escape > width) || count < 1)
    throw std::invalid_argument("straddle_orbit: need 0 < width < escape and count >= 1");
  const Eigen::VectorXd dir = direction.normalized();
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd anchor = seed;

  struct Run {
    int side;  // -1 / +1 by exit side, 0 when the orbit stayed for `limit` iterates
    std::vector<Eigen::VectorXd> orbit;
  };
  auto run = [&](double s, long limit) {
    Run r{0, {}};
    Eigen::VectorXd x = anchor + s * dir;
    double last = s;
    for (long i = 0; i < limit; ++i) {
      try {
        x = map(x);
      } catch (const Error&) {
        r.side = last >= 0.0 ? 1 : -1;
        return r;
      }
      last = (x - anchor).dot(dir);
      if (std::abs(last) > escape) {
        r.side = last > 0.0 ? 1 : -1;
        return r;
      }
      r.orbit.push_back(x);
    }
    return r;
  };

  while (static_cast<long>(out.size()) < count) {
    const long limit = count - static_cast<long>(out.size());
    Run lo = run(-width, limit), hi = run(width, limit);
    if (lo.side == 0 || hi.side == 0) {
      const Run& stay = lo.side == 0 ? lo : hi;
      out.insert(out.end(), stay.orbit.begin(), stay.orbit.end());
      break;
    }
    if (lo.side == hi.side)
      throw DetectionError("straddle_orbit: both ends of the segment leave on the same side");
    double a = -width, b = width;
    std::vector<Eigen::VectorXd> best = lo.orbit.size() > hi.orbit.size() ? lo.orbit : hi.orbit;
    bool stayed = false;
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + anchor.norm()); ++it) {
      const double m = 0.5 * (a + b);
      Run mid = run(m, limit);
      if (mid.orbit.size() >= best.size()) best = mid.orbit;
      if (mid.side == 0) {
        stayed = true;
        break;
      }
      if (mid.side == lo.side)
        a = m;
      else
        b = m;
    }
    if (best.empty()) throw DetectionError("straddle_orbit: no orbit stays inside the slab");
    const size_t take = stayed ? best.size() : std::max<size_t>(1, best.size() / 2);
    out.insert(out.end(), best.begin(), best.begin() + static_cast<long>(take));
    anchor = out.back();
  }
  if (static_cast<long>(out.size()) > count) out.resize(static_cast<size_t>(count));
  return out;
}

RotationEstimate rotation_from_orbit(const ClosedCurve& curve, const std::vector<Eigen::VectorXd>& orbit,
                                     int windows) {
  if (orbit.size() < 3) throw std::invalid_argument("rotation_number: orbit too short");
  if (windows < 2) throw std::invalid_argument("rotation_number: need at least two windows");
  const size_t n = orbit.size() - 1;
  std::vector<double> inc(n);
  double prev = curve.angle_of(orbit[0]) / kTwoPi;
  for (size_t i = 0; i < n; ++i) {
    const double a = curve.angle_of(orbit[i + 1]) / kTwoPi;
    const double d = wrap_turn(a - prev);
    if (std::abs(d) > 0.45)
      throw SolverError("rotation_number: angular step of " + std::to_string(d) +
                        " turns cannot be unwrapped; use more harmonics or a smaller eps");
    inc[i] = d;
    prev = a;
  }
  // weighted Birkhoff average with the bump weight exp(-1/(s(1-s)))
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double s = (i + 0.5) / static_cast<double>(n);
    const double w = std::exp(-1.0 / (s * (1.0 - s)));
    num += w * inc[i];
    den += w;
  }
  RotationEstimate r;
  r.raw = num / den;
  r.rho = r.raw - std::floor(r.raw);
  r.iterates = static_cast<long>(n);
  const size_t per = n / static_cast<size_t>(windows);
  if (per < 1) throw std::invalid_argument("rotation_number: fewer iterates than windows");
  std::vector<double> slopes;
  for (int w = 0; w < windows; ++w) {
    double sum = 0.0;
    for (size_t i = w * per; i < (w + 1) * per; ++i) sum += inc[i];
    slopes.push_back(sum / per);
  }
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= windows;
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  var /= (windows - 1);
  r.error = std::sqrt(var / windows);
  return r;
}

RotationEstimate rotation_number(const SectionMap& map, TorusEstimate& torus, long iterates, int windows) {
  if (iterates < 1000) throw std::invalid_argument("rotation_number: at least 1000 iterates are required");
  if (torus.tail.empty()) throw std::invalid_argument("rotation_number: torus estimate has no orbit to continue");
  std::vector<Eigen::VectorXd> orbit{torus.tail.front()};
  auto more = poincare_iterate(map, orbit.front(), iterates);
  orbit.insert(orbit.end(), more.begin(), more.end());
  RotationEstimate r = rotation_from_orbit(torus.curve, orbit, windows);
  torus.rotation_number = r.rho;
  torus.rotation_error = r.error;
  torus.tail.front() = orbit.back();
  return r;
}

RotationEstimate rotation_over_turns(const SectionMap& map, TorusEstimate& torus, double turns,
                                     long max_iterates, int windows) {
  if (!(turns > 0.0) || max_iterates < 1000)
    throw std::invalid_argument("rotation_over_turns: turns must be positive and max_iterates >= 1000");
  if (torus.tail.empty()) throw std::invalid_argument("rotation_over_turns: torus estimate has no orbit to continue");
  std::vector<Eigen::VectorXd> orbit{torus.tail.front()};
  double prev = torus.curve.angle_of(orbit.front()), lift = 0.0;
  long i = 0;
  while (std::abs(lift) < turns * kTwoPi || i < 1000) {
    if (i == max_iterates) throw SolverError("rotation_over_turns: turn count not reached within max_iterates");
    Eigen::VectorXd x;
    try {
      x = map(orbit.back());
    } catch (const Error& e) {
      throw EscapeError(std::string("rotation_over_turns: ") + e.what(), i);
    }
    const double a = torus.curve.angle_of(x);
    lift += std::remainder(a - prev, kTwoPi);
    prev = a;
    orbit.push_back(std::move(x));
    ++i;
  }
  RotationEstimate r = rotation_from_orbit(torus.curve, orbit, windows);
  torus.rotation_number = r.rho;
  torus.rotation_error = r.error;
  torus.tail.front() = orbit.back();
  return r;
}

StabilityReport stability_probe(const SectionMap& map, const TorusEstimate& torus, double radius, int trials,
                                long horizon, std::uint64_t rng_seed) {
  if (!(radius > 0.0) || trials < 1 || horizon < 1)
    throw std::invalid_argument("stability_probe: radius, trials and horizon must be positive");
  const int d = map.dim();
  if (torus.curve.dim() != d) throw std::invalid_argument("stability_probe: torus does not match the map");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> uphi(0.0, kTwoPi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int attracted = 0, escaped = 0, contracting = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const double phi = uphi(rng);
    const Eigen::VectorXd base = torus.curve.point(phi);
    const Eigen::VectorXd tangent = torus.curve.derivative(phi).normalized();
    Eigen::VectorXd dir(d);
    do {
      for (int c = 0; c < d; ++c) dir(c) = gauss(rng);
      dir -= dir.dot(tangent) * tangent;
    } while (dir.norm() < 1e-8);
    dir.normalize();
    Eigen::VectorXd x = base + radius * dir;
    bool shrank = false;
    for (long i = 0; i < horizon; ++i) {
      double dist;
      try {
        x = map(x);
        dist = torus.curve.distance(x);
      } catch (const Error&) {
        ++escaped;
        break;
      }
      if (dist < 0.5 * radius) shrank = true;
      if (dist < 0.1 * radius) {
        ++attracted;
        break;
      }
      if (dist > 10.0 * radius) {
        ++escaped;
        break;
      }
    }
    if (shrank) ++contracting;
  }
  StabilityReport rep;
  rep.trials = trials;
  rep.rng_seed = rng_seed;
  rep.fraction_attracted = static_cast<double>(attracted) / trials;
  rep.fraction_escaped = static_cast<double>(escaped) / trials;
  rep.fraction_undecided = 1.0 - rep.fraction_attracted - rep.fraction_escaped;
  rep.fraction_contracting = static_cast<double>(contracting) / trials;
  if (rep.fraction_attracted >= 0.95)
    rep.classification = "attracting";
  else if (rep.fraction_escaped >= 0.05 && (rep.fraction_attracted >= 0.05 || rep.fraction_contracting >= 0.05))
    rep.classification = "saddle-like";
  else if (rep.fraction_escaped >= 0.95)
    rep.classification = "repelling";
  else
    rep.classification = "undecided";
  return rep;
}

std::vector<ClosenessRow> averaging_closeness(const SystemSpec& spec, int l, const Eigen::VectorXd& z0,
                                              const std::vector<double>& eps_list, double c,
                                              const IntegratorConfig& cfg, int samples) {
  if (!(c > 0.0) || samples < 1) throw std::invalid_argument("averaging_closeness: c and samples must be positive");
  if (z0.size() != spec.dimension()) throw std::invalid_argument("averaging_closeness: z0 has wrong dimension");
  const AveragedField avg(spec, l);
  const AutonomousField g = avg.autonomous();
  const int n = spec.dimension();
  std::vector<ClosenessRow> rows;
  for (double eps : eps_list) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("averaging_closeness: eps must be >= 0");
    ClosenessRow row;
    row.eps = eps;
    row.horizon = eps > 0.0 ? c / eps : c;
    const double scale = std::pow(eps, l);
    Integrator full(n, system_rhs(spec, eps), cfg);
    Integrator red(
        n, [&g, scale](double, const double* z, double* dz) {
          g.eval(z, dz);
          for (int i = 0; i < g.dim; ++i) dz[i] *= scale;
        },
        cfg);
    Eigen::VectorXd x = z0, z = z0;
    double t = 0.0;
    for (int k = 1; k <= samples; ++k) {
      const double t1 = row.horizon * k / samples;
      x = full.advance(t, t1, x);
      z = red.advance(t, t1, z);
      t = t1;
      row.max_deviation = std::max(row.max_deviation, (x - z).norm());
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace avgtori
