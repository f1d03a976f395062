#pragma once

// Sub-Finsler metrics on the horizontal bundle and their fiberwise duals.
//
// A metric is evaluated on (x, h) where h holds the coefficients of a
// horizontal vector in the orthonormal frame X_1(x), ..., X_m(x); the fiber
// inner product is therefore the Euclidean dot product of coefficients.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sublab/carnot.hpp"

namespace sublab {

enum class Regularity { Continuous, LowerSemicontinuous, UpperSemicontinuous, Measurable };
enum class DualStrategy { EllipticExact, PolyhedralExact, Sampled };

std::string_view to_string(Regularity r);
Regularity regularity_from_string(std::string_view s);
std::string_view to_string(DualStrategy s);

using MetricRule = std::function<double(const Point&, const Vec&)>;
using MatrixField = std::function<Mat(const Point&)>;
using VertexField = std::function<std::vector<Vec>(const Point&)>;

/// How a metric is represented; exact duals exist for the first three.
enum class MetricForm { Elliptic, Gauge, Support, Generic };

struct SubFinslerMetric {
  std::string name;
  int rank = 0;  // fiber dimension m
  double alpha = 1.0;
  Regularity regularity = Regularity::Continuous;
  bool convex = true;
  /// Left-invariant: eval(x, h) does not depend on x.
  bool base_independent = false;

  MetricForm form = MetricForm::Generic;
  MetricRule rule;
  MatrixField matrix;    // Elliptic: eval = sqrt(h^T A(x) h)
  VertexField vertices;  // Gauge of conv(V(x)), or its support function max |<h, w>|
  int sample_resolution = 256;  // mesh size used when this metric's dual is sampled
  /// Known constant with phi(x, h) >= floor |h|; zero means only 1/alpha is known.
  double floor = 0.0;

  [[nodiscard]] double lower_constant() const { return floor > 0.0 ? floor : 1.0 / alpha; }

  double operator()(const Point& x, const Vec& h) const { return rule(x, h); }
  [[nodiscard]] DualStrategy dual_strategy() const;
};

/// Eigenvalues of A(x) must lie in [alpha^-2, alpha^2] on `validation_points`.
SubFinslerMetric make_elliptic(std::string name, int rank, MatrixField A, double alpha,
                               const std::vector<Point>& validation_points, bool base_independent = false,
                               Regularity regularity = Regularity::Continuous);

/// Gauge of the symmetric polytope conv(V(x)).
SubFinslerMetric make_polyhedral(std::string name, int rank, VertexField V, double alpha,
                                 const std::vector<Point>& validation_points, bool base_independent = false,
                                 Regularity regularity = Regularity::Continuous);

SubFinslerMetric make_generic(std::string name, int rank, MetricRule rule, double alpha, Regularity regularity,
                              bool convex, bool base_independent = false);

SubFinslerMetric make_euclidean(int rank);
/// c * phi, alpha scaled to max(c, 1/c) * alpha.
SubFinslerMetric scaled(const SubFinslerMetric& phi, double c);

// Built-in families used by the experiments.

/// A(x) = R(theta) diag(e^{k s}, e^{-k s}) R(theta)^T in the (1,2) fiber plane,
/// theta = omega (x_1 - x_2 + x_n), s = sin(theta). Eigenvalues lie in
/// [e^-k, e^k]; the default k = ln 2 gives alpha = 2 with room to spare.
SubFinslerMetric make_oscillating(const Group& g, double omega = 1.0, double kappa = 0.6931471805599453);
/// a(x) |h| with a = low for x_1 < interface and high for x_1 > interface. On
/// the interface a takes the value that makes the tag true: low for lsc,
/// high for usc.
SubFinslerMetric make_two_phase(int rank, double interface, double low, double high, Regularity side);
/// (1 + amplitude sin(2 pi frequency x_1)) |h|.
SubFinslerMetric make_laminate(int rank, double frequency, double amplitude);
/// "l1" (cross-polytope gauge) or "linf" (cube gauge) on a rank-m fiber.
SubFinslerMetric make_lp_gauge(int rank, const std::string& which);
/// min(|h|_2, c |h|_1); not convex for c in (1/sqrt(m), 1).
SubFinslerMetric make_nonconvex_min(int rank, double c = 0.8);

/// Deterministic quasi-uniform unit vectors in R^m: equally spaced angles for
/// m = 2, a Fibonacci lattice for m = 3, normalized Halton-Gaussian points above.
std::vector<Vec> sphere_directions(int m, int count);

/// Gauge of a symmetric polytope with vertices V.
double polytope_gauge(const std::vector<Vec>& V, const Vec& h);

struct DualValue {
  double value = 0.0;
  DualStrategy strategy = DualStrategy::Sampled;
  /// Relative error bound; zero for exact strategies. Sampled values are lower bounds.
  double error_bound = 0.0;
};

DualValue dual_eval_detailed(const SubFinslerMetric& phi, const Point& x, const Vec& v);
double dual_eval(const SubFinslerMetric& phi, const Point& x, const Vec& v);

/// Sampled dual sup using a nested mesh with `resolution` points at the finest
/// level plus golden-section refinement; nondecreasing in `resolution`.
DualValue sampled_dual(const SubFinslerMetric& phi, const Point& x, const Vec& v, int resolution);

/// The dual metric phi*, with the regularity swap of the semicontinuity lemma.
SubFinslerMetric dual_metric(const SubFinslerMetric& phi);

struct HorizontalSample {
  Point x;
  Vec h;
};

struct BidualReport {
  DualStrategy strategy = DualStrategy::Sampled;
  double max_relative_gap = 0.0;  // max |phi** - phi| / phi
  double min_signed_gap = 0.0;    // min (phi** - phi) / phi, negative where phi is not convex
  double bound = 0.0;             // 1e-9 for exact strategies, the mesh bound otherwise
  std::size_t worst_index = 0;
  bool passed = false;
};

BidualReport bidual_check(const SubFinslerMetric& phi, const std::vector<HorizontalSample>& samples);

struct AxiomReport {
  double homogeneity = 0.0;  // worst relative violation
  double sandwich = 0.0;
  double triangle = 0.0;     // only checked when the convex flag is set
  bool homogeneity_ok = false;
  bool sandwich_ok = false;
  bool triangle_ok = false;
  [[nodiscard]] bool ok() const { return homogeneity_ok && sandwich_ok && triangle_ok; }
};

AxiomReport verify_metric_axioms(const SubFinslerMetric& phi, const std::vector<Point>& points,
                                 const std::vector<Vec>& vectors, double tol = 1e-10);

struct SemicontinuityReport {
  double value = 0.0;
  double dual_value = 0.0;
  double sampled_inf = 0.0;  // over the smallest neighborhood
  double sampled_sup = 0.0;
  double dual_sampled_inf = 0.0;
  double dual_sampled_sup = 0.0;
  bool lower_ok = true;  // checked for lsc/continuous tags
  bool upper_ok = true;  // checked for usc/continuous tags
  [[nodiscard]] bool ok() const { return lower_ok && upper_ok; }
};

/// Samples phi and phi* on shrinking neighborhoods of (x, v) and checks the
/// one-sided limits implied by the declared regularity tag.
SemicontinuityReport semicontinuity_probe(const Group& g, const SubFinslerMetric& phi, const Point& x, const Vec& v,
                                          const std::vector<double>& radii, int samples_per_radius,
                                          double tol = 1e-6);

}  // namespace sublab
