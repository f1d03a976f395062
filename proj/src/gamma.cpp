#include "sublab/gamma.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sublab/parallel.hpp"

namespace sublab {

namespace {

constexpr double kQuadTol = 1e-13;
// Vertices of the limit dual ball per half boundary; calibrations use every
// kCalibrationStride-th of them so their margin is exactly zero.
constexpr int kLimitVertices = 1024;
constexpr int kCalibrationStride = 16;

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, kQuadTol);
}

// lambda_k = a_min sin(theta_k) with theta uniform on [-pi/2, pi/2]: dense
// where F is steep.
std::vector<double> lambda_grid(double a_min, int intervals) {
  std::vector<double> out;
  for (int k = 0; k <= intervals; ++k) {
    const double theta = -0.5 * std::numbers::pi + std::numbers::pi * k / intervals;
    out.push_back(a_min * std::sin(theta));
  }
  return out;
}

std::vector<Vec> transverse_directions(int rank) {
  if (rank == 2) return {Vec::Ones(1)};
  return sphere_directions(rank - 1, 8);
}

Interval to_interval(const DistanceEstimate& e) { return {e.lower, e.upper}; }

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms, Vec box_lo, Vec box_hi)
    : atoms_(std::move(atoms)), lo_(std::move(box_lo)), hi_(std::move(box_hi)) {
  if (lo_.size() != hi_.size()) throw Error(ErrorCode::DimensionMismatch, "box corners differ in dimension");
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_(i) <= hi_(i))) throw Error(ErrorCode::InvalidSpec, "box corner lo exceeds hi");
  }
  auto inside = [&](const Point& p) {
    if (p.coords.size() != lo_.size()) throw Error(ErrorCode::DimensionMismatch, "atom outside the box dimension");
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (p.coords(i) < lo_(i) || p.coords(i) > hi_(i)) return false;
    }
    return true;
  };
  for (const Atom& a : atoms_) {
    if (!(a.w > 0.0) || !std::isfinite(a.w)) throw Error(ErrorCode::InvalidSpec, "atom weights must be positive and finite");
    if (!inside(a.x) || !inside(a.y)) throw Error(ErrorCode::InvalidSpec, "atom outside the sampling box");
  }
}

double AtomicMeasure::total_mass() const {
  double m = 0.0;
  for (const Atom& a : atoms_) m += a.w;
  return m;
}

AtomicMeasure drift_measure(const Group& g, const AtomicMeasure& mu, const Point& u, int n, double weight_rate) {
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "drift index must be positive");
  const Point shift = g.dilate(1.0 / n, u);
  std::vector<Atom> atoms;
  for (const Atom& a : mu.atoms()) {
    atoms.push_back({g.mul(a.x, shift), g.mul(a.y, shift), a.w * (1.0 + weight_rate / n)});
  }
  return AtomicMeasure(std::move(atoms), mu.box_lo(), mu.box_hi());
}

LaminateCell::LaminateCell(double amplitude) : amplitude_(amplitude) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw Error(ErrorCode::AlphaBoundViolation, "laminate amplitude must be in [0, 1)");
}

double LaminateCell::a(double s) const { return 1.0 + amplitude_ * std::sin(2.0 * std::numbers::pi * s); }

double LaminateCell::cumulative_root(double lambda, double s) const {
  const double l2 = lambda * lambda;
  auto root = [this, l2](double t) {
    const double v = a(t);
    return std::sqrt(std::max(0.0, v * v - l2));
  };
  // a is extremal at 1/4 and 3/4; the root has a kink there when lambda = a_min.
  auto partial = [&](double hi) {
    double total = 0.0;
    double from = 0.0;
    for (double cut : {0.25, 0.75, 1.0}) {
      const double to = std::min(cut, hi);
      total += integrate(root, from, to);
      from = cut;
      if (cut >= hi) break;
    }
    return total;
  };
  const double periods = std::floor(s);
  const double frac = s - periods;
  return periods * partial(1.0) + partial(frac);
}

double LaminateCell::mean_root(double lambda) const { return cumulative_root(lambda, 1.0); }

double LaminateCell::homogenized(double v_par, double v_perp) const {
  v_par = std::abs(v_par);
  v_perp = std::abs(v_perp);
  if (v_par == 0.0) return a_min() * v_perp;
  auto neg = [&](double lambda) { return -(v_par * mean_root(lambda) + lambda * v_perp); };
  const auto [arg, val] =
      boost::math::tools::brent_find_minima(neg, 0.0, a_min(), std::numeric_limits<double>::digits);
  (void)arg;
  // The maximum can sit at either end of the interval.
  return std::max({-val, -neg(0.0), -neg(a_min())});
}

double LaminateCell::homogenized(const Vec& v) const { return homogenized(v(0), v.tail(v.size() - 1).norm()); }

std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::Constant: return "constant";
    case FamilyKind::Scaling: return "scaling";
    case FamilyKind::Laminate: return "laminate";
  }
  return "?";
}

DistanceFamily::DistanceFamily(FamilyKind kind, GroupPtr g, SubFinslerMetric base, SolverConfig cfg, double alpha)
    : kind_(kind), group_(std::move(g)), base_(std::move(base)), cfg_(std::move(cfg)), alpha_(alpha) {}

DistanceFamily DistanceFamily::constant(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg) {
  const double alpha = phi.alpha;
  DistanceFamily f(FamilyKind::Constant, std::move(g), std::move(phi), std::move(cfg), alpha);
  f.limit_ = f.base_;
  return f;
}

DistanceFamily DistanceFamily::scaling(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg, double epsilon) {
  if (!(epsilon > -1.0)) throw Error(ErrorCode::InvalidSpec, "scaling epsilon must exceed -1");
  const double worst = std::max(1.0 + epsilon, 1.0 / (1.0 + epsilon));
  const double alpha = phi.alpha * std::max(1.0, worst);
  DistanceFamily f(FamilyKind::Scaling, std::move(g), std::move(phi), std::move(cfg), alpha);
  f.epsilon_ = epsilon;
  f.limit_ = f.base_;
  return f;
}

DistanceFamily DistanceFamily::laminate(GroupPtr g, double amplitude, SolverConfig cfg, int segments_per_period) {
  if (g->rank() < 2) throw Error(ErrorCode::InvalidSpec, "laminate family needs rank at least 2");
  if (segments_per_period < 1) throw Error(ErrorCode::InvalidSpec, "segments per period must be positive");
  const LaminateCell cell(amplitude);
  const int m = g->rank();
  SubFinslerMetric base = make_laminate(m, 1.0, amplitude);
  DistanceFamily f(FamilyKind::Laminate, g, base, std::move(cfg), 1.0 / (1.0 - amplitude));
  f.amplitude_ = amplitude;
  f.segments_per_period_ = segments_per_period;

  std::vector<Vec> W;
  for (double lambda : lambda_grid(cell.a_min(), kLimitVertices)) {
    const double par = cell.mean_root(lambda);
    for (const Vec& u : transverse_directions(m)) {
      Vec w(m);
      w(0) = par;
      w.tail(m - 1) = lambda * u;
      W.push_back(w);
      w(0) = -par;
      W.push_back(w);
    }
  }
  const SubFinslerMetric ball =
      make_polyhedral("laminate-hom-dual", m, [W](const Point&) { return W; }, f.alpha_, {g->identity()}, true);
  f.limit_ = dual_metric(ball);
  f.limit_.name = "laminate-hom";
  return f;
}

SubFinslerMetric DistanceFamily::metric(int n) const {
  if (n < 0) throw Error(ErrorCode::InvalidSpec, "family index must be nonnegative");
  if (n == 0) return limit_;
  switch (kind_) {
    case FamilyKind::Constant: return base_;
    case FamilyKind::Scaling: return scaled(base_, 1.0 + epsilon_ / n);
    case FamilyKind::Laminate: return make_laminate(group_->rank(), n, amplitude_);
  }
  return base_;
}

SolverConfig DistanceFamily::config(int n) const {
  SolverConfig c = cfg_;
  if (kind_ == FamilyKind::Laminate && n > 0) c.segments = std::max(c.segments, segments_per_period_ * n);
  return c;
}

std::vector<ValidatedFunction> DistanceFamily::competitors(int n) const {
  if (kind_ != FamilyKind::Laminate) return {};
  // Calibrations f = lambda <u, x_perp> + G(x_1) with |grad_H f| = a exactly,
  // so the dual metric of grad_H f is 1 everywhere.
  const auto cell = std::make_shared<LaminateCell>(amplitude_);
  const int m = group_->rank();
  std::vector<ValidatedFunction> out;
  const auto lambdas = lambda_grid(cell->a_min(), kLimitVertices);
  for (std::size_t k = 0; k < lambdas.size(); k += kCalibrationStride) {
    const double lambda = lambdas[k];
    const double mean = cell->mean_root(lambda);
    for (const Vec& u : transverse_directions(m)) {
      ValidatedFunction vf;
      vf.margin = 0.0;
      std::ostringstream label;
      label << "calibration(lambda=" << lambda << ")";
      vf.label = label.str();
      vf.f = [cell, lambda, mean, u, n, m](const Point& x) {
        const double perp = lambda * u.dot(x.coords.segment(1, m - 1));
        const double par = n == 0 ? mean * x.coords(0) : cell->cumulative_root(lambda, n * x.coords(0)) / n;
        return perp + par;
      };
      out.push_back(std::move(vf));
    }
  }
  return out;
}

const DistanceOracle& DistanceFamily::oracle(int n) const {
  if (n < 0) throw Error(ErrorCode::InvalidSpec, "family index must be nonnegative");
  const int key = kind_ == FamilyKind::Constant ? 0 : n;
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->oracles[key];
  if (!slot) slot = std::make_unique<DistanceOracle>(group_, metric(n), config(n), competitors(n));
  return *slot;
}

Interval DistanceFamily::distance(int n, const Point& x, const Point& y) const {
  if (kind_ == FamilyKind::Laminate && n == 0) {
    const Group& g = *group_;
    const Vec z = g.relative(x, y).coords;
    const int m = g.rank();
    const double scale = std::max(1.0, z.head(m).norm());
    if (z.tail(g.dim() - m).cwiseAbs().maxCoeff() <= 1e-12 * scale * scale) {
      const double v = LaminateCell(amplitude_).homogenized(Vec(z.head(m)));
      const double slack = 1e-10 * v;
      return {v - slack, v + slack};
    }
  }
  return to_interval(oracle(n).estimate(x, y));
}

std::vector<Interval> DistanceFamily::distances(int n, const std::vector<std::pair<Point, Point>>& pairs,
                                                int threads) const {
  std::vector<Interval> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) { out[i] = distance(n, pairs[i].first, pairs[i].second); });
  return out;
}

JValue J_eval(const DistanceFamily& family, int n, const AtomicMeasure& mu, int threads) {
  const auto& atoms = mu.atoms();
  JValue out;
  out.per_atom.resize(atoms.size());
  std::vector<char> failed(atoms.size(), 0);
  parallel_for(atoms.size(), threads, [&](std::size_t i) {
    try {
      out.per_atom[i] = family.distance(n, atoms[i].x, atoms[i].y);
    } catch (const Error&) {
      failed[i] = 1;
      out.per_atom[i] = {0.0, std::numeric_limits<double>::infinity()};
    }
  });
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    out.value.lower += atoms[i].w * out.per_atom[i].lower;
    out.value.upper += atoms[i].w * out.per_atom[i].upper;
    if (failed[i]) out.flagged.push_back(i);
  }
  return out;
}

double L_eval(const SubFinslerMetric& phi, const HorizontalCurve& gamma) {
  if (phi.regularity != Regularity::Continuous) {
    throw Error(ErrorCode::NotContinuousMetric, "metric '" + phi.name + "' is not continuous");
  }
  if (!phi.convex) throw Error(ErrorCode::NotConvexMetric, "metric '" + phi.name + "' is not convex");
  return gamma.length(phi);
}

UniformGap uniform_distance_gap(const DistanceFamily& family, int n, const std::vector<Point>& grid, int threads) {
  std::vector<std::pair<Point, Point>> pairs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) pairs.emplace_back(grid[i], grid[j]);
  }
  const auto dn = family.distances(n, pairs, threads);
  const auto d = family.distances(0, pairs, threads);
  UniformGap out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out.gap = std::max(out.gap, std::abs(dn[p].midpoint() - d[p].midpoint()));
    out.uncertainty = std::max(out.uncertainty, dn[p].width() + d[p].width());
  }
  return out;
}

bool ConvergenceReport::strictly_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].error < rows[i - 1].error)) return false;
  }
  return true;
}

bool ConvergenceReport::decreasing_within_tolerance() const {
  double max_width = 0.0;
  for (const auto& r : rows) max_width = std::max(max_width, r.width);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].error > rows[i - 1].error + 2.0 * max_width) return false;
  }
  return rows.empty() || rows.back().error <= tolerance;
}

ConvergenceReport continuous_convergence_check(const DistanceFamily& family,
                                               const std::function<AtomicMeasure(int)>& measure_at,
                                               const AtomicMeasure& limit, const std::vector<int>& ns,
                                               int threads) {
  ConvergenceReport rep;
  rep.j_limit = J_eval(family, 0, limit, threads).value;
  double max_width = 0.0;
  for (int n : ns) {
    ConvergenceRow row;
    row.n = n;
    row.j_n = J_eval(family, n, measure_at(n), threads).value;
    row.error = std::abs(row.j_n.midpoint() - rep.j_limit.midpoint());
    row.width = row.j_n.width() + rep.j_limit.width();
    max_width = std::max(max_width, row.width);
    rep.rows.push_back(row);
  }
  // log error = log C - rate log n
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (const auto& r : rep.rows) {
    if (!(r.error > 0.0) || r.n < 1) continue;
    const double lx = std::log(static_cast<double>(r.n));
    const double ly = std::log(r.error);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count >= 2 && sxx * count - sx * sx > 0.0) {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    rep.rate = -slope;
    rep.constant = std::exp((sy - slope * sx) / count);
  }
  const double fitted = rep.rows.empty() || rep.constant == 0.0
                            ? 0.0
                            : rep.constant * std::pow(static_cast<double>(rep.rows.back().n), -rep.rate);
  rep.tolerance = 2.0 * max_width + fitted;
  return rep;
}

namespace {

// Pieces placed on consecutive intervals of length 1/r, driven from `start`.
HorizontalCurve join_pieces(const GroupPtr& g, const Point& start, const std::vector<HorizontalCurve>& pieces) {
  const double r = static_cast<double>(pieces.size());
  std::vector<double> breaks{0.0};
  std::vector<Vec> values;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Control& c = pieces[i].control();
    for (int j = 0; j < c.segments(); ++j) {
      const double t = (static_cast<double>(i) + c.breaks()[static_cast<std::size_t>(j) + 1]) / r;
      breaks.push_back(j + 1 == c.segments() ? (static_cast<double>(i) + 1.0) / r : t);
      values.push_back(r * c.value(j));
    }
  }
  breaks.back() = 1.0;
  return HorizontalCurve(g, start, Control(std::move(breaks), std::move(values)));
}

}  // namespace

std::vector<RecoveryRow> recovery_sequence(const DistanceFamily& family, const HorizontalCurve& gamma,
                                           const std::vector<int>& ns, const std::vector<int>& rs, int threads) {
  if (ns.size() != rs.size()) throw Error(ErrorCode::DimensionMismatch, "one piece count per index is required");
  const GroupPtr& gp = family.group();
  const Group& g = *gp;
  const double length_limit = L_eval(family.metric(0), gamma);
  std::vector<RecoveryRow> rows;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const int n = ns[k];
    const int r = rs[k];
    if (n < 1 || r < 1) throw Error(ErrorCode::InvalidSpec, "recovery indices must be positive");
    RecoveryRow row;
    row.n = n;
    row.r = r;
    row.length_limit = length_limit;
    row.construction_slack = std::ldexp(1.0, -r);

    std::vector<Point> nodes;
    for (int i = 0; i <= r; ++i) nodes.push_back(gamma.evaluate(static_cast<double>(i) / r));
    std::vector<DistanceEstimate> est(static_cast<std::size_t>(r));
    std::vector<char> failed(static_cast<std::size_t>(r), 0);
    const DistanceOracle& d = family.oracle(n);
    parallel_for(est.size(), threads, [&](std::size_t i) {
      try {
        est[i] = d.estimate(nodes[i], nodes[i + 1]);
      } catch (const Error&) {
        failed[i] = 1;
      }
    });
    std::vector<HorizontalCurve> pieces;
    for (std::size_t i = 0; i < est.size(); ++i) {
      if (failed[i] || est[i].curve.empty()) {
        // Fall back to the target curve itself on this piece.
        row.flagged.push_back(i);
        const double a = static_cast<double>(i) / r;
        const double b = static_cast<double>(i + 1) / r;
        std::vector<Vec> vals;
        const int sub = 16;
        for (int j = 0; j < sub; ++j) {
          const double t = a + (b - a) * (j + 0.5) / sub;
          vals.push_back((b - a) * gamma.control().value(gamma.control().piece(t)));
        }
        pieces.emplace_back(gp, nodes[i], Control(std::move(vals)));
        row.distance_sum += pieces.back().length(family.metric(n));
        continue;
      }
      pieces.push_back(est[i].curve);
      row.distance_sum += est[i].upper;
      row.max_piece_slack = std::max(row.max_piece_slack, est[i].upper - est[i].lower);
    }
    row.curve = join_pieces(gp, gamma.start(), pieces);
    row.length_n = row.curve.length(family.metric(n));
    row.endpoint_gap = endpoint_gap(g, row.curve.endpoint(), gamma.endpoint(), row.curve.control().segments());

    std::vector<double> ts;
    const int samples = 512;
    for (int i = 0; i <= samples; ++i) ts.push_back(static_cast<double>(i) / samples);
    for (double t : row.curve.control().breaks()) ts.push_back(t);
    for (double t : ts) {
      const Vec z = g.relative(gamma.evaluate(t), row.curve.evaluate(t)).coords;
      row.sup_distance = std::max(row.sup_distance, g.gauge(z));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double EquicontinuityReport::spread() const {
  if (constants.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

EquicontinuityReport equicontinuity_fit(const DistanceFamily& family, const std::vector<int>& ns,
                                        const std::vector<Point>& grid, int threads) {
  const std::size_t G = grid.size();
  const double inv_k = 1.0 / family.group()->step();
  std::vector<std::pair<Point, Point>> pairs;
  for (std::size_t i = 0; i < G; ++i) {
    for (std::size_t j = i + 1; j < G; ++j) pairs.emplace_back(grid[i], grid[j]);
  }
  std::vector<double> hol(G * G, 0.0);
  for (std::size_t i = 0; i < G; ++i) {
    for (std::size_t j = 0; j < G; ++j) hol[i * G + j] = std::pow((grid[i].coords - grid[j].coords).norm(), inv_k);
  }
  EquicontinuityReport rep;
  for (int n : ns) {
    const auto est = family.distances(n, pairs, threads);
    std::vector<double> D(G * G, 0.0);
    std::size_t p = 0;
    for (std::size_t i = 0; i < G; ++i) {
      for (std::size_t j = i + 1; j < G; ++j, ++p) D[i * G + j] = D[j * G + i] = est[p].midpoint();
    }
    double c = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      for (std::size_t j = 0; j < G; ++j) {
        for (std::size_t a = 0; a < G; ++a) {
          for (std::size_t b = 0; b < G; ++b) {
            const double den = hol[i * G + a] + hol[j * G + b];
            if (den > 0.0) c = std::max(c, std::abs(D[i * G + j] - D[a * G + b]) / den);
          }
        }
      }
    }
    rep.ns.push_back(n);
    rep.constants.push_back(c);
    rep.constant = std::max(rep.constant, c);
  }
  return rep;
}

std::vector<Point> box_lattice(const Vec& lo, const Vec& hi, int per_axis) {
  if (lo.size() != hi.size()) throw Error(ErrorCode::DimensionMismatch, "box corners differ in dimension");
  if (per_axis < 1) throw Error(ErrorCode::InvalidSpec, "lattice needs at least one point per axis");
  const int dim = static_cast<int>(lo.size());
  std::vector<Point> out;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    Vec p(dim);
    for (int i = 0; i < dim; ++i) {
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / (per_axis - 1);
      p(i) = lo(i) + t * (hi(i) - lo(i));
    }
    out.emplace_back(p);
    int i = dim - 1;
    while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return out;
}

}  // namespace sublab
