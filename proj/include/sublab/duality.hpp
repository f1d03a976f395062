#pragma once

// Lower bounds for the dual-side distance delta_phi through Lipschitz
// competitors, the delta_phi <= d_{phi*} sandwich, pointwise Lipschitz
// constants and the increasing cone approximations h_n.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sublab/solver.hpp"

namespace sublab {

enum class CompetitorKind { Analytic, Cone, Smoothed };

struct Competitor {
  CompetitorKind kind = CompetitorKind::Analytic;
  std::function<double(const Point&)> f;
  /// Horizontal gradient (X_1 f, ..., X_m f); empty when unknown.
  std::function<Vec(const Point&)> grad_h;

  // Cone data: f(x) = max_j (values_j - L d(x, anchors_j)) - slack.
  std::vector<Point> anchors;
  std::vector<double> values;
  double lipschitz = 1.0;
  double slack = 0.0;
  std::shared_ptr<const DistanceOracle> oracle;

  bool validated = false;
  double grid_max = 0.0;  // max of phi(x, grad f(x)) over the validation grid
  double margin = 0.0;    // max(0, grid_max - 1)

  double operator()(const Point& x) const { return f(x); }
  [[nodiscard]] ValidatedFunction as_validated() const;
};

Competitor analytic_competitor(std::function<double(const Point&)> f, std::function<Vec(const Point&)> grad_h = {});

/// Requires |values_i - values_j| <= L d(anchor_i, anchor_j) on upper estimates.
Competitor cone_competitor(std::shared_ptr<const DistanceOracle> oracle, std::vector<Point> anchors,
                           std::vector<double> values, double L, double slack = 0.0);

/// Horizontal gradient by central differences along the frame:
/// (f(x exp(s e_k)) - f(x exp(-s e_k))) / 2s. Cone competitors re-solve the
/// active distances warm-started from the curve at x.
Vec fd_horizontal_gradient(const Group& g, const Competitor& c, const Point& x, double step = 1e-5);

enum class GradientMode { Auto, Analytic, FiniteDifference };

/// Records the grid maximum of phi(x, grad f(x)) and the margin.
Competitor validate_competitor(const Group& g, const SubFinslerMetric& phi, Competitor c,
                               const std::vector<Point>& grid, GradientMode mode = GradientMode::Auto,
                               int threads = 1);

/// max over validated competitors of |f(x) - f(y)| / (1 + margin).
double delta_lower(const std::vector<Competitor>& competitors, const Point& x, const Point& y);

struct DualityGap {
  double delta_lower = 0.0;
  double d_dual_upper = 0.0;
  double relative_gap = 0.0;
  double margin = 0.0;
  bool ordering_ok = true;
};

/// Holds the phi* distance oracle and the validated distance cones so that
/// several queries share work.
class DualityLab {
 public:
  /// `relative_grid` lists validation points relative to the cone's anchor
  /// (the grid for anchor a is a * g_k). It should avoid the anchor's cut locus.
  DualityLab(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg, std::vector<Point> relative_grid, int threads = 1);

  [[nodiscard]] const SubFinslerMetric& metric() const { return phi_; }
  [[nodiscard]] const SubFinslerMetric& dual() const { return dual_; }
  [[nodiscard]] const std::shared_ptr<const DistanceOracle>& dual_oracle() const { return oracle_; }

  /// The cone -d_{phi*}(., anchor), validated against phi. For left-invariant
  /// phi the validation at the identity is reused for every anchor.
  [[nodiscard]] Competitor distance_cone(const Point& anchor) const;
  [[nodiscard]] DualityGap duality_gap(const Point& x, const Point& y) const;

 private:
  GroupPtr group_;
  SubFinslerMetric phi_;
  SubFinslerMetric dual_;
  SolverConfig cfg_;
  std::vector<Point> grid_;
  int threads_;
  std::shared_ptr<const DistanceOracle> oracle_;
  mutable std::optional<double> invariant_margin_;
  mutable std::mutex mutex_;
};

/// A default validation grid around the identity that avoids the vertical
/// axis, where distance cones of step-2 groups are not differentiable.
std::vector<Point> default_relative_grid(const Group& g, int count, double radius);

struct LipschitzEstimate {
  std::vector<double> radii;
  std::vector<double> per_radius;  // max over the direction fan
  double value = 0.0;              // at the smallest radius
  double spread = 0.0;
};

/// Fan of y = x * delta_r(u): m-dimensional unit circle or sphere directions
/// in the first layer plus the same number of off-layer directions, refined
/// by golden section for rank 2.
LipschitzEstimate pointwise_lip(const std::function<double(const Point&)>& f, const DistanceOracle& delta,
                                const Point& x, const std::vector<double>& radii, int fan = 16);

struct PhiLipSample {
  Point x;
  double phi_grad = 0.0;
  double lip = 0.0;
  double relative_error = 0.0;
};

struct PhiLipReport {
  std::vector<PhiLipSample> samples;
  double threshold = 0.07;
  [[nodiscard]] double max_relative_error() const;
  [[nodiscard]] bool passed() const { return max_relative_error() <= threshold; }
};

/// phi(x, grad f(x)) against the pointwise Lipschitz constant with respect to
/// the phi* distance.
PhiLipReport check_phi_eq_lip(const GroupPtr& g, const SubFinslerMetric& phi, const Competitor& f,
                              const std::vector<Point>& samples, const SolverConfig& cfg,
                              const std::vector<double>& radii, int threads = 1);

struct GlobalLipReport {
  double global_ratio = 0.0;  // max over pairs |f(x)-f(y)| / d_{phi*}(x,y)
  double esssup = 0.0;        // max over the grid of pointwise_lip
  double relative_difference = 0.0;
  [[nodiscard]] bool passed(double tol = 0.10) const { return relative_difference <= tol; }
};

GlobalLipReport global_lip_vs_esssup(const GroupPtr& g, const SubFinslerMetric& phi,
                                     const std::function<double(const Point&)>& f, const std::vector<Point>& grid,
                                     const std::vector<std::pair<Point, Point>>& pairs, const SolverConfig& cfg,
                                     const std::vector<double>& radii, int threads = 1);

struct SmoothingReport {
  double cone_bound = 0.0;
  double smoothed_bound = 0.0;
  double cone_margin = 0.0;
  double smoothed_margin = 0.0;
  double relative_shortfall = 0.0;  // (cone - smoothed) / cone
};

/// Averages the distance cone at x over left translates delta_rho(u_k) * z
/// (a symmetric set of first-layer directions), re-validates the result and
/// compares the two lower bounds for (x, y).
SmoothingReport smooth_competitor_sufficiency(const DualityLab& lab, const Point& x, const Point& y, double rho,
                                              const std::vector<Point>& relative_grid);

struct ConeSchemeRow {
  int n = 0;
  int anchors = 0;
  double epsilon = 0.0;   // covering radius of the anchors used for this n
  std::vector<double> h;  // h_n at each test point
};

struct ConeSchemeReport {
  std::vector<ConeSchemeRow> rows;
  std::vector<double> target;        // f at each test point
  std::vector<double> nearest;       // min_j d(x, x_j) over all anchors used, per point
  double covering_radius = 0.0;      // max over points of `nearest`
  double lipschitz = 1.0;
  std::size_t not_increasing = 0;
  std::size_t not_below = 0;
  std::size_t bound_violations = 0;  // f - h_n > (2L+1) eps + 1/n
  [[nodiscard]] bool passed() const { return not_increasing == 0 && not_below == 0 && bound_violations == 0; }
};

/// h_n(x) = max_{j < k_n} (f(x_j) - L d(x, x_j)) - 1/n for n in `ns`, where
/// k_n = anchor_counts[i] is nondecreasing.
ConeSchemeReport cone_scheme(const DistanceOracle& d, const std::function<double(const Point&)>& f, double L,
                             const std::vector<Point>& anchors, const std::vector<Point>& test_points,
                             const std::vector<int>& ns, const std::vector<int>& anchor_counts, int threads = 1);

}  // namespace sublab
