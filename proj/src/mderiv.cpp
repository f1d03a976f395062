#include "sublab/mderiv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sublab/parallel.hpp"

namespace sublab {

std::vector<double> default_t_schedule() {
  std::vector<double> t;
  for (int k = 3; k <= 10; ++k) t.push_back(std::ldexp(1.0, -k));
  return t;
}

MDerivEstimate metric_derivative(const DistanceOracle& d, const Point& x, const HorizontalVector& v,
                                 const std::vector<double>& schedule) {
  if (!(v.base == x)) throw Error(ErrorCode::BaseMismatch, "vector is not attached to the query point");
  if (schedule.size() < 3) throw Error(ErrorCode::InvalidSpec, "schedule needs at least three values");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0) || (k > 0 && !(schedule[k] < schedule[k - 1]))) {
      throw Error(ErrorCode::InvalidSpec, "schedule must be positive and strictly decreasing");
    }
  }
  const Group& g = *d.group();
  MDerivEstimate est;
  est.t_values = schedule;
  for (double t : schedule) {
    const Point y = g.mul(x, g.exp_horizontal(t * v.h));
    try {
      est.ratios.push_back(d.upper(x, y) / t);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "distance oracle failed at t = " << t << ": " << e.what();
      throw Error(ErrorCode::OracleFailure, os.str());
    }
  }
  const std::size_t K = est.ratios.size();
  const double r0 = est.ratios[K - 3], r1 = est.ratios[K - 2], r2 = est.ratios[K - 1];
  const double q1 = schedule[K - 3] / schedule[K - 2];
  const double q2 = schedule[K - 2] / schedule[K - 1];
  // Linear-in-t error model: r(t) = L + a t.
  const double e1 = (q1 * r1 - r0) / (q1 - 1.0);
  const double e2 = (q2 * r2 - r1) / (q2 - 1.0);
  est.extrapolated = e2;
  est.richardson_disagreement = std::abs(e2 - e1);
  est.spread = std::max({r0, r1, r2}) - std::min({r0, r1, r2});
  return est;
}

std::vector<ConvexityCheck> check_convexity(const DistanceOracle& d, const Point& x,
                                            const std::vector<std::pair<Vec, Vec>>& pairs,
                                            const std::vector<double>& schedule) {
  std::vector<ConvexityCheck> out;
  for (const auto& [v1, v2] : pairs) {
    const auto a = metric_derivative(d, x, {x, v1}, schedule);
    const auto b = metric_derivative(d, x, {x, v2}, schedule);
    const auto c = metric_derivative(d, x, {x, Vec(v1 + v2)}, schedule);
    ConvexityCheck chk;
    chk.v1 = v1;
    chk.v2 = v2;
    chk.phi_v1 = a.extrapolated;
    chk.phi_v2 = b.extrapolated;
    chk.phi_sum = c.extrapolated;
    chk.excess = c.extrapolated - a.extrapolated - b.extrapolated;
    chk.tol = a.tolerance() + b.tolerance() + c.tolerance() + 1e-9 * (a.extrapolated + b.extrapolated);
    chk.ok = chk.excess <= chk.tol;
    out.push_back(std::move(chk));
  }
  return out;
}

bool ComparisonReport::ok() const {
  return std::all_of(samples.begin(), samples.end(), [](const MetricComparison& s) { return s.ok; });
}

double ComparisonReport::max_relative_gap() const {
  double worst = 0.0;
  for (const auto& s : samples) {
    if (s.psi > 0.0) worst = std::max(worst, std::abs(s.gap) / s.psi);
  }
  return worst;
}

ComparisonReport compare_with_metric(const GroupPtr& g, const SubFinslerMetric& psi,
                                     const std::vector<HorizontalVector>& samples, const SolverConfig& cfg,
                                     const std::vector<double>& schedule, int threads) {
  if (!psi.convex) throw Error(ErrorCode::NotConvexMetric, "metric '" + psi.name + "' is not flagged convex");
  const DistanceOracle d(g, psi, cfg);
  ComparisonReport rep;
  rep.samples.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto est = metric_derivative(d, s.base, s, schedule);
    MetricComparison& c = rep.samples[i];
    c.x = s.base;
    c.v = s.h;
    c.estimate = est;
    c.phi_d = est.extrapolated;
    c.psi = psi(s.base, s.h);
    c.gap = c.phi_d - c.psi;
    // The endpoint tolerance is relative to the query scale, so it enters
    // the ratio as a relative error.
    c.tol = est.tolerance() + 2.0 * cfg.endpoint_tol * c.psi;
    switch (psi.regularity) {
      case Regularity::Continuous: c.ok = std::abs(c.gap) <= c.tol; break;
      case Regularity::UpperSemicontinuous: c.ok = c.gap <= c.tol; break;
      case Regularity::LowerSemicontinuous: c.ok = c.gap >= -c.tol; break;
      case Regularity::Measurable:
        c.flagged = std::abs(c.gap) > c.tol;
        c.ok = true;
        break;
    }
  });
  return rep;
}

double fit_norm_constant(const DistanceOracle& dcc, int samples) {
  const Group& g = *dcc.group();
  double c = 1.0;
  for (const Vec& v : sphere_directions(g.dim(), samples)) {
    const double dist = dcc.upper(g.identity(), Point(v));
    c = std::max({c, dist, 1.0 / dist});
  }
  return c;
}

bool within_sandwich(const MDerivEstimate& e, double v_norm, double alpha, double c) {
  const double tol = e.tolerance();
  return e.extrapolated >= v_norm / (c * alpha) - tol && e.extrapolated <= c * alpha * v_norm + tol;
}

}  // namespace sublab
