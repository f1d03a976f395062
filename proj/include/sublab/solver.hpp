#pragma once

// Intrinsic distance estimation by direct trajectory optimization over
// piecewise-constant controls. Every estimate is an interval [lower, upper]:
// upper is the length of an explicit curve reaching the target, lower comes
// from certified bounds.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sublab/carnot.hpp"
#include "sublab/curves.hpp"
#include "sublab/metrics.hpp"

namespace sublab {

struct SolverConfig {
  int segments = 64;
  int multistarts = 8;
  std::vector<double> penalty_schedule{1.0, 10.0, 100.0};
  int max_iters = 500;
  double step_tol = 1e-9;
  std::uint64_t seed = 0;
  int refine_levels = 0;
  double endpoint_tol = 1e-6;
  double fd_step = 1e-6;
  int penalty_iters = 20;
};

struct DistanceEstimate {
  double upper = 0.0;
  double lower = 0.0;
  HorizontalCurve curve;
  std::string lower_witness;
  bool converged = false;
  int iterations = 0;
  double endpoint_gap = 0.0;
};

/// A real function on the group, feasible for the dual problem up to `margin`:
/// |f(x) - f(y)| / (1 + margin) is a lower bound for the distance.
struct ValidatedFunction {
  std::function<double(const Point&)> f;
  double margin = 0.0;
  std::string label;
};

/// Homogeneous gauge of log(reached^-1 target), with coordinate errors below
/// the floating-point noise floor of the products treated as zero.
double endpoint_gap(const Group& g, const Point& reached, const Point& target, int segments);

/// lower_constant(phi) |first-layer part of x^-1 y|.
double first_layer_lower_bound(const Group& g, const SubFinslerMetric& phi, const Point& x, const Point& y);
double competitor_lower_bound(const std::vector<ValidatedFunction>& competitors, const Point& x, const Point& y);

/// With `warm_start`, that curve is moved onto the new endpoints by
/// minimum-norm projection and returned without further optimization; the
/// multistart count is ignored. This is meant for finite differences.
DistanceEstimate solve_distance(const GroupPtr& g, const SubFinslerMetric& phi, const Point& x, const Point& y,
                                const SolverConfig& cfg, const std::vector<ValidatedFunction>& competitors = {},
                                const HorizontalCurve* warm_start = nullptr);

DistanceEstimate cc_distance(const GroupPtr& g, const Point& x, const Point& y, const SolverConfig& cfg);

/// Cached, exactly symmetric distance estimates for one (group, metric) pair.
/// Queries are put in a canonical order and the curve is reversed on the way
/// out, so estimate(x, y) and estimate(y, x) agree bit for bit.
class DistanceOracle {
 public:
  /// `competitors` feed the lower bound of every query.
  DistanceOracle(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg, std::vector<ValidatedFunction> competitors = {});

  [[nodiscard]] const GroupPtr& group() const { return group_; }
  [[nodiscard]] const SubFinslerMetric& metric() const { return phi_; }
  [[nodiscard]] const SolverConfig& config() const { return cfg_; }

  [[nodiscard]] DistanceEstimate estimate(const Point& x, const Point& y) const;
  [[nodiscard]] double upper(const Point& x, const Point& y) const { return estimate(x, y).upper; }
  /// Not cached; used for finite differences around an already solved query.
  [[nodiscard]] DistanceEstimate estimate_warm(const Point& x, const Point& y, const HorizontalCurve& warm) const;
  [[nodiscard]] std::vector<DistanceEstimate> batch(const std::vector<std::pair<Point, Point>>& queries,
                                                    int threads) const;
  [[nodiscard]] std::size_t cache_size() const;

 private:
  GroupPtr group_;
  SubFinslerMetric phi_;
  SolverConfig cfg_;
  std::vector<ValidatedFunction> competitors_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, DistanceEstimate> cache_;
};

struct EquivalenceReport {
  std::size_t pairs = 0;
  /// Pairs where the bounds prove d < d_cc / alpha or d > alpha d_cc.
  std::size_t certified_violations = 0;
  /// Same comparison on upper estimates only; informative, not a proof.
  std::size_t estimate_violations = 0;
  double worst_ratio_low = 0.0;   // min d_upper / d_cc_upper
  double worst_ratio_high = 0.0;  // max d_upper / d_cc_upper
  double holder_constant = 1.0;   // smallest C with |x-y|/C <= d_cc <= C |x-y|^(1/k)
  [[nodiscard]] bool passed() const { return certified_violations == 0; }
};

EquivalenceReport dcc_equivalence_report(const DistanceOracle& d, const DistanceOracle& dcc,
                                         const std::vector<Point>& grid, double alpha, int threads = 1);

/// Points center * delta_lambda(u_k) with d(center, .) = r within 1e-3 r, one
/// per direction u_k on the unit gauge sphere.
std::vector<Point> sphere_sample(const DistanceOracle& d, const Point& center, double r, int directions);

}  // namespace sublab
