#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avgtori/integrator.hpp"
#include "avgtori/system.hpp"

namespace avgtori {

/// Deterministic first-return map on a section, in section coordinates.
class SectionMap {
 public:
  using Step = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  SectionMap(std::string name, int dim, double eps, Step step);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double eps() const { return eps_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

 private:
  std::string name_;
  int dim_;
  double eps_;
  Step step_;
};

/// Time-T map x(0) -> x(T) of x' = sum eps^i F_i(t, x); the section is t = 0 mod T.
SectionMap stroboscopic_map(std::shared_ptr<const SystemSpec> spec, double eps, IntegratorConfig cfg);

/// `count` successive returns of x0 (x0 itself excluded). Any failure of the
/// map is rethrown as EscapeError carrying the iterate index (1-based).
std::vector<Eigen::VectorXd> poincare_iterate(const SectionMap& map, const Eigen::VectorXd& x0, long count);

/// Trigonometric closed curve p(phi) = a0 + sum_k a_k cos(k phi) + b_k sin(k phi),
/// parametrised by the angle phi of the projection onto a plane through `center`.
class ClosedCurve {
 public:
  ClosedCurve() = default;
  ClosedCurve(Eigen::VectorXd center, Eigen::VectorXd e1, Eigen::VectorXd e2, Eigen::MatrixXd coeffs);

  int dim() const { return static_cast<int>(center_.size()); }
  int harmonics() const { return static_cast<int>((coeffs_.cols() - 1) / 2); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& axis1() const { return e1_; }
  const Eigen::VectorXd& axis2() const { return e2_; }
  /// dim x (2H+1): column 0 is a0, columns 2k-1 and 2k are a_k and b_k.
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }

  Eigen::VectorXd point(double phi) const;
  Eigen::VectorXd derivative(double phi) const;
  /// Projected angle of p in [0, 2 pi).
  double angle_of(const Eigen::VectorXd& p) const;
  /// Euclidean distance from p to the curve; the minimising parameter goes to *phi.
  double distance(const Eigen::VectorXd& p, double* phi = nullptr) const;
  std::vector<Eigen::VectorXd> sample(int m) const;
  /// True when the projected angle increases strictly along the curve.
  bool angularly_ordered(int m = 2048) const;
  /// RMS amplitude of each harmonic k = 0..H (smoothness diagnostic).
  Eigen::VectorXd harmonic_amplitudes() const;

 private:
  Eigen::VectorXd center_, e1_, e2_;
  Eigen::MatrixXd coeffs_;
  Eigen::MatrixXd cache_;  // dim x kCache samples for the coarse distance search
};

/// Symmetric Hausdorff distance between two finite point sets.
double hausdorff(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

struct TorusOptions {
  int harmonics = 16;
  int bins = 64;
  double roughness = 1e-10;  // weight of the sum k^4 (a_k^2 + b_k^2) penalty
  int residual_samples = 64;
  int curve_samples = 4096;
  long stride = 1;  // detect_torus keeps every stride-th iterate after the transient
  /// Section trace of the unperturbed invariant set; fixes the centre and
  /// plane of the angular parameter and is the target of the distance.
  std::vector<Eigen::VectorXd> reference;
};

struct TorusEstimate {
  double eps = 0.0;
  ClosedCurve curve;
  double invariance_residual = 0.0;
  double distance_to_unperturbed = -1.0;  // -1 without a reference trace
  double tube = 0.0;                      // largest distance of a used iterate from the curve
  double rotation_number = -1.0;          // filled by rotation_number()
  double rotation_error = 0.0;
  long iterates_used = 0;
  int seeds_used = 0;
  int seeds_escaped = 0;
  std::vector<Eigen::VectorXd> tail;  // last iterate of every surviving orbit
};

/// Fits a closed curve through the pooled orbit points by periodic angular
/// binning and weighted trigonometric least squares, then measures the
/// invariance residual max dist(P(c(phi_j)), c) over curve samples.
TorusEstimate fit_torus(const SectionMap& map, const std::vector<std::vector<Eigen::VectorXd>>& orbits,
                        const TorusOptions& opts = {});

/// Runs every seed for `transient` iterates, keeps the next `keep` ones (every
/// opts.stride-th of them) from
/// the seeds that do not escape, and fits the invariant curve.
TorusEstimate detect_torus(const SectionMap& map, const std::vector<Eigen::VectorXd>& seeds, long transient,
                           long keep, const TorusOptions& opts = {});

/// Orbit segment shadowing an invariant curve with one unstable normal
/// direction. Points seed + s * direction are bisected in s on the side to
/// which their orbits leave the slab |(x - anchor) . direction| <= escape,
/// restarting from the shadowing orbit until `count` points are collected.
std::vector<Eigen::VectorXd> straddle_orbit(const SectionMap& map, const Eigen::VectorXd& seed,
                                            const Eigen::VectorXd& direction, double width, double escape,
                                            long count);

struct RotationEstimate {
  double rho = 0.0;    // fractional turns per iterate, in [0, 1)
  double error = 0.0;  // standard error from windowed slopes
  double raw = 0.0;    // weighted Birkhoff average before taking the fractional part
  long iterates = 0;
};

/// Lifts `iterates` returns of the curve's stored tail point to the angular
/// parameter, unwraps, and takes the weighted Birkhoff average of the angular
/// increments. Throws SolverError when a step is too close to half a turn to
/// unwrap unambiguously.
RotationEstimate rotation_number(const SectionMap& map, TorusEstimate& torus, long iterates, int windows = 10);

/// Like rotation_number, but iterates until the lifted angle has advanced
/// `turns` full turns (so no rate has to be guessed in advance). Throws
/// SolverError when `max_iterates` is reached first.
RotationEstimate rotation_over_turns(const SectionMap& map, TorusEstimate& torus, double turns,
                                     long max_iterates, int windows = 10);

/// Same estimator on an explicit orbit (used by rotation_number).
RotationEstimate rotation_from_orbit(const ClosedCurve& curve, const std::vector<Eigen::VectorXd>& orbit,
                                     int windows = 10);

struct StabilityReport {
  double fraction_attracted = 0.0;
  double fraction_escaped = 0.0;
  double fraction_undecided = 0.0;
  double fraction_contracting = 0.0;  // distance fell below radius/2 at some iterate
  std::string classification;         // attracting | saddle-like | repelling | undecided
  std::uint64_t rng_seed = 0;
  int trials = 0;
};

/// Starts `trials` points at distance `radius` from the curve in random normal
/// directions and follows each for at most `horizon` iterates: attracted below
/// radius/10, escaped above 10 radius or on failure of the map.
StabilityReport stability_probe(const SectionMap& map, const TorusEstimate& torus, double radius, int trials,
                                long horizon, std::uint64_t rng_seed = 20240607);

struct ClosenessRow {
  double eps = 0.0;
  double horizon = 0.0;
  double max_deviation = 0.0;
};

/// Max over [0, c/eps] of |x(t) - z(t)| between x' = sum eps^i F_i(t, x) and the
/// truncated averaged system z' = eps^l g_l(z), both from z0.
std::vector<ClosenessRow> averaging_closeness(const SystemSpec& spec, int l, const Eigen::VectorXd& z0,
                                              const std::vector<double>& eps_list, double c = 1.0,
                                              const IntegratorConfig& cfg = IntegratorConfig::adaptive(1e-11, 1e-11),
                                              int samples = 400);

}  // namespace avgtori
