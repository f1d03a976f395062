#include "sublab/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sublab/parallel.hpp"

namespace sublab {

ValidatedFunction Competitor::as_validated() const {
  if (!validated) throw Error(ErrorCode::InvalidSpec, "competitor has not been validated");
  return {f, margin, kind == CompetitorKind::Cone ? "cone" : kind == CompetitorKind::Smoothed ? "smoothed" : "analytic"};
}

Competitor analytic_competitor(std::function<double(const Point&)> f, std::function<Vec(const Point&)> grad_h) {
  Competitor c;
  c.kind = CompetitorKind::Analytic;
  c.f = std::move(f);
  c.grad_h = std::move(grad_h);
  return c;
}

Competitor cone_competitor(std::shared_ptr<const DistanceOracle> oracle, std::vector<Point> anchors,
                           std::vector<double> values, double L, double slack) {
  if (anchors.size() != values.size() || anchors.empty()) {
    throw Error(ErrorCode::InvalidSpec, "cone needs one value per anchor");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      const double d = oracle->upper(anchors[i], anchors[j]);
      if (std::abs(values[i] - values[j]) > L * d * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "anchors " << i << " and " << j << ": |dv| = " << std::abs(values[i] - values[j]) << " > L d = " << L * d;
        throw Error(ErrorCode::IncompatibleValues, os.str());
      }
    }
  }
  Competitor c;
  c.kind = CompetitorKind::Cone;
  c.anchors = std::move(anchors);
  c.values = std::move(values);
  c.lipschitz = L;
  c.slack = slack;
  c.oracle = std::move(oracle);
  c.f = [o = c.oracle, A = c.anchors, V = c.values, L, slack](const Point& x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < A.size(); ++j) best = std::max(best, V[j] - L * o->upper(x, A[j]));
    return best - slack;
  };
  return c;
}

Vec fd_horizontal_gradient(const Group& g, const Competitor& c, const Point& x, double step) {
  const int m = g.rank();
  Vec grad(m);
  if (c.kind != CompetitorKind::Cone) {
    for (int k = 0; k < m; ++k) {
      Vec e = Vec::Zero(m);
      e(k) = step;
      grad(k) = (c.f(g.mul(x, g.exp_horizontal(e))) - c.f(g.mul(x, g.exp_horizontal(-e)))) / (2.0 * step);
    }
    return grad;
  }
  // Active anchors at x; others cannot become active within the step.
  std::vector<double> at_x(c.anchors.size());
  std::vector<DistanceEstimate> est(c.anchors.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.anchors.size(); ++j) {
    est[j] = c.oracle->estimate(x, c.anchors[j]);
    at_x[j] = c.values[j] - c.lipschitz * est[j].upper;
    best = std::max(best, at_x[j]);
  }
  auto value_at = [&](const Point& xs) {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.anchors.size(); ++j) {
      if (at_x[j] < best - 2.5 * c.lipschitz * step) continue;
      const double d = xs == c.anchors[j] ? 0.0 : c.oracle->estimate_warm(xs, c.anchors[j], est[j].curve).upper;
      v = std::max(v, c.values[j] - c.lipschitz * d);
    }
    return v;
  };
  for (int k = 0; k < m; ++k) {
    Vec e = Vec::Zero(m);
    e(k) = step;
    grad(k) = (value_at(g.mul(x, g.exp_horizontal(e))) - value_at(g.mul(x, g.exp_horizontal(-e)))) / (2.0 * step);
  }
  return grad;
}

Competitor validate_competitor(const Group& g, const SubFinslerMetric& phi, Competitor c,
                               const std::vector<Point>& grid, GradientMode mode, int threads) {
  if (mode == GradientMode::Analytic && !c.grad_h) {
    throw Error(ErrorCode::GradientUnavailable, "analytic gradient requested but none supplied");
  }
  const bool use_fd = mode == GradientMode::FiniteDifference || !c.grad_h;
  std::vector<double> vals(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const Vec grad = use_fd ? fd_horizontal_gradient(g, c, grid[i]) : c.grad_h(grid[i]);
    if (!grad.allFinite()) throw Error(ErrorCode::GradientUnavailable, "non-finite gradient on the grid");
    vals[i] = phi(grid[i], grad);
  });
  c.grid_max = vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end());
  c.margin = std::max(0.0, c.grid_max - 1.0);
  c.validated = true;
  return c;
}

double delta_lower(const std::vector<Competitor>& competitors, const Point& x, const Point& y) {
  double best = 0.0;
  for (const auto& c : competitors) {
    if (!c.validated) throw Error(ErrorCode::InvalidSpec, "competitor has not been validated");
    best = std::max(best, std::abs(c.f(x) - c.f(y)) / (1.0 + c.margin));
  }
  return best;
}

std::vector<Point> default_relative_grid(const Group& g, int count, double radius) {
  std::vector<Point> out;
  const int m = g.rank();
  for (const Vec& u : sphere_directions(g.dim(), 8 * count)) {
    if (static_cast<int>(out.size()) == count) break;
    if (g.step() > 1 && u.head(m).norm() < 0.4) continue;
    const Point p(u);
    out.push_back(g.dilate(radius / g.gauge(u), p));
  }
  return out;
}

DualityLab::DualityLab(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg, std::vector<Point> relative_grid,
                       int threads)
    : group_(std::move(g)), phi_(std::move(phi)), dual_(dual_metric(phi_)), cfg_(std::move(cfg)),
      grid_(std::move(relative_grid)), threads_(threads),
      oracle_(std::make_shared<const DistanceOracle>(group_, dual_, cfg_)) {
  if (!phi_.convex) throw Error(ErrorCode::NotConvexMetric, "metric '" + phi_.name + "' is not flagged convex");
}

Competitor DualityLab::distance_cone(const Point& anchor) const {
  Competitor c = cone_competitor(oracle_, {anchor}, {0.0}, 1.0);
  if (phi_.base_independent) {
    std::lock_guard lock(mutex_);
    if (!invariant_margin_) {
      const Competitor at_e = validate_competitor(*group_, phi_, cone_competitor(oracle_, {group_->identity()}, {0.0}, 1.0),
                                                  grid_, GradientMode::FiniteDifference, threads_);
      invariant_margin_ = at_e.grid_max;
    }
    c.grid_max = *invariant_margin_;
    c.margin = std::max(0.0, c.grid_max - 1.0);
    c.validated = true;
    return c;
  }
  std::vector<Point> grid;
  grid.reserve(grid_.size());
  for (const Point& p : grid_) grid.push_back(group_->mul(anchor, p));
  return validate_competitor(*group_, phi_, std::move(c), grid, GradientMode::FiniteDifference, threads_);
}

DualityGap DualityLab::duality_gap(const Point& x, const Point& y) const {
  DualityGap out;
  if (x == y) return out;
  out.d_dual_upper = oracle_->upper(x, y);
  const Competitor cone = distance_cone(x);
  out.margin = cone.margin;
  out.delta_lower = delta_lower({cone}, x, y);
  out.relative_gap = (out.d_dual_upper - out.delta_lower) / out.d_dual_upper;
  out.ordering_ok = out.delta_lower <= out.d_dual_upper;
  return out;
}

LipschitzEstimate pointwise_lip(const std::function<double(const Point&)>& f, const DistanceOracle& delta,
                                const Point& x, const std::vector<double>& radii, int fan) {
  const Group& g = *delta.group();
  const int m = g.rank();
  const double fx = f(x);
  LipschitzEstimate est;
  est.radii = radii;
  for (double r : radii) {
    auto ratio = [&](const Point& y) {
      const double d = delta.upper(x, y);
      return d > 0.0 ? std::abs(f(y) - fx) / d : 0.0;
    };
    auto horizontal = [&](const Vec& u) { return ratio(g.mul(x, g.exp_horizontal(r * u))); };
    double best = 0.0;
    Vec best_u = Vec::Zero(m);
    for (const Vec& u : sphere_directions(m, fan)) {
      const double v = horizontal(u);
      if (v > best) {
        best = v;
        best_u = u;
      }
    }
    if (m == 2 && best > 0.0) {
      const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
      const double th0 = std::atan2(best_u(1), best_u(0));
      double a = th0 - 2.0 * std::numbers::pi / fan, b = th0 + 2.0 * std::numbers::pi / fan;
      auto at = [&](double th) {
        Vec u(2);
        u << std::cos(th), std::sin(th);
        return horizontal(u);
      };
      double c1 = b - gold * (b - a), c2 = a + gold * (b - a);
      double f1 = at(c1), f2 = at(c2);
      for (int it = 0; it < 10; ++it) {
        if (f1 < f2) {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + gold * (b - a);
          f2 = at(c2);
        } else {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - gold * (b - a);
          f1 = at(c1);
        }
      }
      best = std::max({best, f1, f2});
    }
    if (g.step() > 1) {
      for (const Vec& u : sphere_directions(g.dim(), std::max(2, fan / 4))) {
        const Point w = g.dilate(r / g.gauge(u), Point(u));
        best = std::max(best, ratio(g.mul(x, w)));
      }
    }
    est.per_radius.push_back(best);
  }
  if (!est.per_radius.empty()) {
    est.value = est.per_radius.back();
    const auto [lo, hi] = std::minmax_element(est.per_radius.begin(), est.per_radius.end());
    est.spread = *hi - *lo;
  }
  return est;
}

double PhiLipReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, s.relative_error);
  return worst;
}

PhiLipReport check_phi_eq_lip(const GroupPtr& g, const SubFinslerMetric& phi, const Competitor& f,
                              const std::vector<Point>& samples, const SolverConfig& cfg,
                              const std::vector<double>& radii, int threads) {
  if (phi.regularity != Regularity::UpperSemicontinuous && phi.regularity != Regularity::Continuous) {
    throw Error(ErrorCode::InvalidSpec, "metric must be tagged usc or continuous");
  }
  if (!f.grad_h) throw Error(ErrorCode::GradientUnavailable, "check needs an analytic horizontal gradient");
  const DistanceOracle delta(g, dual_metric(phi), cfg);
  PhiLipReport rep;
  rep.samples.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    PhiLipSample& s = rep.samples[i];
    s.x = samples[i];
    s.phi_grad = phi(s.x, f.grad_h(s.x));
    s.lip = pointwise_lip(f.f, delta, s.x, radii).value;
    s.relative_error = s.phi_grad > 1e-12 ? std::abs(s.phi_grad - s.lip) / s.phi_grad : std::abs(s.lip);
  });
  return rep;
}

GlobalLipReport global_lip_vs_esssup(const GroupPtr& g, const SubFinslerMetric& phi,
                                     const std::function<double(const Point&)>& f, const std::vector<Point>& grid,
                                     const std::vector<std::pair<Point, Point>>& pairs, const SolverConfig& cfg,
                                     const std::vector<double>& radii, int threads) {
  const DistanceOracle delta(g, dual_metric(phi), cfg);
  GlobalLipReport rep;
  const auto est = delta.batch(pairs, threads);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (est[p].upper > 0.0) {
      rep.global_ratio = std::max(rep.global_ratio, std::abs(f(pairs[p].first) - f(pairs[p].second)) / est[p].upper);
    }
  }
  std::vector<double> lips(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { lips[i] = pointwise_lip(f, delta, grid[i], radii).value; });
  for (double v : lips) rep.esssup = std::max(rep.esssup, v);
  const double scale = std::max(rep.global_ratio, rep.esssup);
  rep.relative_difference = scale > 0.0 ? std::abs(rep.global_ratio - rep.esssup) / scale : 0.0;
  return rep;
}

SmoothingReport smooth_competitor_sufficiency(const DualityLab& lab, const Point& x, const Point& y, double rho,
                                              const std::vector<Point>& relative_grid) {
  const Competitor cone = lab.distance_cone(x);
  const Group& g = *lab.dual_oracle()->group();
  const int m = g.rank();
  std::vector<Point> shifts;
  for (int k = 0; k < m; ++k) {
    Vec e = Vec::Zero(m);
    e(k) = rho;
    shifts.push_back(g.exp_horizontal(e));
    shifts.push_back(g.exp_horizontal(-e));
  }
  Competitor smooth;
  smooth.kind = CompetitorKind::Smoothed;
  smooth.f = [cone, shifts, &g](const Point& z) {
    double acc = 0.0;
    for (const Point& w : shifts) acc += cone.f(g.mul(w, z));
    return acc / static_cast<double>(shifts.size());
  };
  // Left translation commutes with the right-invariant difference quotient,
  // so the averaged gradient is the average of cone gradients.
  smooth.grad_h = [cone, shifts, &g](const Point& z) {
    Vec acc = Vec::Zero(g.rank());
    for (const Point& w : shifts) acc += fd_horizontal_gradient(g, cone, g.mul(w, z));
    return Vec(acc / static_cast<double>(shifts.size()));
  };
  std::vector<Point> grid;
  for (const Point& p : relative_grid) grid.push_back(g.mul(x, p));
  smooth = validate_competitor(g, lab.metric(), std::move(smooth), grid, GradientMode::Analytic);
  SmoothingReport rep;
  rep.cone_margin = cone.margin;
  rep.smoothed_margin = smooth.margin;
  rep.cone_bound = delta_lower({cone}, x, y);
  rep.smoothed_bound = delta_lower({smooth}, x, y);
  rep.relative_shortfall = rep.cone_bound > 0.0 ? (rep.cone_bound - rep.smoothed_bound) / rep.cone_bound : 0.0;
  return rep;
}

ConeSchemeReport cone_scheme(const DistanceOracle& d, const std::function<double(const Point&)>& f, double L,
                             const std::vector<Point>& anchors, const std::vector<Point>& test_points,
                             const std::vector<int>& ns, const std::vector<int>& anchor_counts, int threads) {
  if (ns.size() != anchor_counts.size() || ns.empty()) throw Error(ErrorCode::InvalidSpec, "one anchor count per n");
  const std::size_t K = static_cast<std::size_t>(*std::max_element(anchor_counts.begin(), anchor_counts.end()));
  if (K > anchors.size()) throw Error(ErrorCode::InvalidSpec, "not enough anchors");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1] || anchor_counts[i] < anchor_counts[i - 1]) {
      throw Error(ErrorCode::InvalidSpec, "n must increase and anchor counts must not decrease");
    }
  }
  std::vector<double> fa(K);
  for (std::size_t j = 0; j < K; ++j) fa[j] = f(anchors[j]);

  std::vector<std::pair<Point, Point>> queries;
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) queries.emplace_back(anchors[i], anchors[j]);
  }
  const auto anchor_d = d.batch(queries, threads);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (std::abs(f(queries[q].first) - f(queries[q].second)) > L * anchor_d[q].upper * (1.0 + 1e-12)) {
      throw Error(ErrorCode::IncompatibleValues, "target is not L-Lipschitz on the anchors");
    }
  }
  queries.clear();
  for (const Point& x : test_points) {
    for (std::size_t j = 0; j < K; ++j) queries.emplace_back(x, anchors[j]);
  }
  const auto dist = d.batch(queries, threads);
  auto D = [&](std::size_t p, std::size_t j) { return dist[p * K + j].upper; };

  ConeSchemeReport rep;
  rep.lipschitz = L;
  rep.target.resize(test_points.size());
  rep.nearest.assign(test_points.size(), std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < test_points.size(); ++p) {
    rep.target[p] = f(test_points[p]);
    for (std::size_t j = 0; j < K; ++j) rep.nearest[p] = std::min(rep.nearest[p], D(p, j));
    rep.covering_radius = std::max(rep.covering_radius, rep.nearest[p]);
  }
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ConeSchemeRow row;
    row.n = ns[i];
    row.anchors = anchor_counts[i];
    double eps = 0.0;
    for (std::size_t p = 0; p < test_points.size(); ++p) {
      double h = -std::numeric_limits<double>::infinity();
      double near = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < static_cast<std::size_t>(anchor_counts[i]); ++j) {
        h = std::max(h, fa[j] - L * D(p, j));
        near = std::min(near, D(p, j));
      }
      row.h.push_back(h - 1.0 / ns[i]);
      eps = std::max(eps, near);
    }
    row.epsilon = eps;
    for (std::size_t p = 0; p < test_points.size(); ++p) {
      if (!(row.h[p] < rep.target[p])) ++rep.not_below;
      if (rep.target[p] - row.h[p] > (2.0 * L + 1.0) * eps + 1.0 / ns[i]) ++rep.bound_violations;
      if (!rep.rows.empty() && !(rep.rows.back().h[p] < row.h[p])) ++rep.not_increasing;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace sublab
