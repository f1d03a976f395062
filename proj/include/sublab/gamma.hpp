#pragma once

// Distance families d_n -> d, the functionals J_d(mu) = sum w d(x, y) and
// L_d(gamma), and desk-scale evidence for their convergence: uniform gaps,
// continuous convergence along moving measures, recovery sequences built from
// almost geodesics and an equicontinuity fit.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "sublab/solver.hpp"

namespace sublab {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] double midpoint() const { return 0.5 * (lower + upper); }
  [[nodiscard]] double width() const { return upper - lower; }
};

struct Atom {
  Point x, y;
  double w = 1.0;
};

/// Finitely many weighted pairs inside an axis-aligned coordinate box.
class AtomicMeasure {
 public:
  AtomicMeasure(std::vector<Atom> atoms, Vec box_lo, Vec box_hi);

  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const Vec& box_lo() const { return lo_; }
  [[nodiscard]] const Vec& box_hi() const { return hi_; }
  [[nodiscard]] double total_mass() const;

 private:
  std::vector<Atom> atoms_;
  Vec lo_, hi_;
};

/// Atoms moved to x * delta_{1/n}(u), y * delta_{1/n}(u), weights times
/// (1 + weight_rate / n).
AtomicMeasure drift_measure(const Group& g, const AtomicMeasure& mu, const Point& u, int n, double weight_rate = 0.0);

/// The one-dimensional cell problem of the laminate a(s) = 1 + A sin(2 pi s).
/// A path crossing the layers conserves lambda = a(s) sin(angle to the layers'
/// normal); averaging over a period gives the homogenized norm
///   phi_hom(v) = max_{0 <= lambda <= a_min} |v_1| F(lambda) + lambda |v_perp|,
/// F(lambda) = mean of sqrt(a^2 - lambda^2). Its dual unit ball is
/// { |xi_perp| <= a_min, |xi_1| <= F(|xi_perp|) }.
class LaminateCell {
 public:
  explicit LaminateCell(double amplitude);

  [[nodiscard]] double amplitude() const { return amplitude_; }
  [[nodiscard]] double a(double s) const;
  [[nodiscard]] double a_min() const { return 1.0 - amplitude_; }
  /// F(lambda) for |lambda| <= a_min.
  [[nodiscard]] double mean_root(double lambda) const;
  /// Integral of sqrt(a(s)^2 - lambda^2) over [0, s], any real s.
  [[nodiscard]] double cumulative_root(double lambda, double s) const;
  [[nodiscard]] double homogenized(double v_par, double v_perp) const;
  [[nodiscard]] double homogenized(const Vec& v) const;

 private:
  double amplitude_;
};

enum class FamilyKind { Constant, Scaling, Laminate };
std::string_view to_string(FamilyKind k);

/// Metrics phi_n indexed by n >= 1 together with their limit, stored at
/// index 0. Distances come from one cached oracle per index.
class DistanceFamily {
 public:
  static DistanceFamily constant(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg);
  /// phi_n = (1 + epsilon / n) phi.
  static DistanceFamily scaling(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg, double epsilon = 1.0);
  /// phi_n(x, h) = a(n x_1) |h| with a(s) = 1 + amplitude sin(2 pi s); the
  /// solver gets segments_per_period * n pieces (at least cfg.segments).
  static DistanceFamily laminate(GroupPtr g, double amplitude, SolverConfig cfg, int segments_per_period = 16);

  [[nodiscard]] FamilyKind kind() const { return kind_; }
  [[nodiscard]] const GroupPtr& group() const { return group_; }
  /// One constant valid for every member and the limit.
  [[nodiscard]] double alpha() const { return alpha_; }

  [[nodiscard]] SubFinslerMetric metric(int n) const;
  [[nodiscard]] SolverConfig config(int n) const;
  [[nodiscard]] std::vector<ValidatedFunction> competitors(int n) const;
  [[nodiscard]] const DistanceOracle& oracle(int n) const;

  /// Solver interval, except for laminate limits between points that differ
  /// by a first-layer displacement, where the homogenized norm is exact.
  [[nodiscard]] Interval distance(int n, const Point& x, const Point& y) const;
  [[nodiscard]] std::vector<Interval> distances(int n, const std::vector<std::pair<Point, Point>>& pairs,
                                                int threads = 1) const;

 private:
  DistanceFamily(FamilyKind kind, GroupPtr g, SubFinslerMetric base, SolverConfig cfg, double alpha);

  struct Cache {
    std::mutex mutex;
    std::map<int, std::unique_ptr<DistanceOracle>> oracles;
  };

  FamilyKind kind_;
  GroupPtr group_;
  SubFinslerMetric base_;
  SolverConfig cfg_;
  double alpha_;
  double epsilon_ = 0.0;
  double amplitude_ = 0.0;
  int segments_per_period_ = 16;
  SubFinslerMetric limit_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct JValue {
  Interval value;
  std::vector<Interval> per_atom;
  /// Atoms whose solve failed; they contribute [0, inf).
  std::vector<std::size_t> flagged;
};

JValue J_eval(const DistanceFamily& family, int n, const AtomicMeasure& mu, int threads = 1);

/// phi-length of gamma. Only licensed for continuous convex metrics, where it
/// coincides with the length induced by d_phi.
double L_eval(const SubFinslerMetric& phi, const HorizontalCurve& gamma);

struct UniformGap {
  double gap = 0.0;          // max over pairs of |mid d_n - mid d|
  double uncertainty = 0.0;  // max over pairs of the two widths' sum
};

UniformGap uniform_distance_gap(const DistanceFamily& family, int n, const std::vector<Point>& grid, int threads = 1);

struct ConvergenceRow {
  int n = 0;
  Interval j_n;
  double error = 0.0;  // |mid J_n(mu_n) - mid J(mu)|
  double width = 0.0;  // width of J_n plus width of J
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  Interval j_limit;
  /// Least-squares fit error ~ constant * n^-rate over the rows.
  double rate = 0.0;
  double constant = 0.0;
  /// 2 max width + fitted error at the last n.
  double tolerance = 0.0;
  [[nodiscard]] bool strictly_decreasing() const;
  /// Each error at most the previous one plus 2 max width, the last below tolerance.
  [[nodiscard]] bool decreasing_within_tolerance() const;
};

ConvergenceReport continuous_convergence_check(const DistanceFamily& family,
                                               const std::function<AtomicMeasure(int)>& measure_at,
                                               const AtomicMeasure& limit, const std::vector<int>& ns,
                                               int threads = 1);

struct RecoveryRow {
  int n = 0;
  int r = 0;
  HorizontalCurve curve;
  double length_n = 0.0;           // L_{d_n}(gamma_n)
  double length_limit = 0.0;       // L_d(gamma)
  double distance_sum = 0.0;       // sum over pieces of the upper d_n estimate
  double max_piece_slack = 0.0;    // solver upper - lower, worst piece
  double construction_slack = 0.0; // 2^-r
  double sup_distance = 0.0;       // max over sampled t of the gauge of gamma(t)^-1 gamma_n(t)
  double endpoint_gap = 0.0;
  std::vector<std::size_t> flagged;  // pieces the solver could not join
};

/// For each (n, r): gamma_n follows an almost d_n-geodesic between
/// gamma(i/r) and gamma((i+1)/r) on [i/r, (i+1)/r].
std::vector<RecoveryRow> recovery_sequence(const DistanceFamily& family, const HorizontalCurve& gamma,
                                           const std::vector<int>& ns, const std::vector<int>& rs, int threads = 1);

struct EquicontinuityReport {
  std::vector<int> ns;
  std::vector<double> constants;  // per n
  double constant = 0.0;          // max over n
  /// max / min of the per-n constants.
  [[nodiscard]] double spread() const;
};

/// Smallest C with |d_n(x, y) - d_n(x', y')| <= C (|x - x'|^(1/k) + |y - y'|^(1/k))
/// over grid 4-tuples, using midpoints.
EquicontinuityReport equicontinuity_fit(const DistanceFamily& family, const std::vector<int>& ns,
                                        const std::vector<Point>& grid, int threads = 1);

/// Uniform lattice with `per_axis` points per coordinate in [lo, hi].
std::vector<Point> box_lattice(const Vec& lo, const Vec& hi, int per_axis);

}  // namespace sublab
