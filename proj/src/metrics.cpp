#include "sublab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sublab/lp.hpp"

namespace sublab {

std::string_view to_string(Regularity r) {
  switch (r) {
    case Regularity::Continuous: return "continuous";
    case Regularity::LowerSemicontinuous: return "lsc";
    case Regularity::UpperSemicontinuous: return "usc";
    case Regularity::Measurable: return "measurable";
  }
  return "measurable";
}

Regularity regularity_from_string(std::string_view s) {
  if (s == "continuous") return Regularity::Continuous;
  if (s == "lsc" || s == "lower-semicontinuous") return Regularity::LowerSemicontinuous;
  if (s == "usc" || s == "upper-semicontinuous") return Regularity::UpperSemicontinuous;
  if (s == "measurable") return Regularity::Measurable;
  throw Error(ErrorCode::ConfigInvalid, "unknown regularity '" + std::string(s) + "'");
}

std::string_view to_string(DualStrategy s) {
  switch (s) {
    case DualStrategy::EllipticExact: return "elliptic-exact";
    case DualStrategy::PolyhedralExact: return "polyhedral-exact";
    case DualStrategy::Sampled: return "sampled";
  }
  return "sampled";
}

DualStrategy SubFinslerMetric::dual_strategy() const {
  switch (form) {
    case MetricForm::Elliptic: return DualStrategy::EllipticExact;
    case MetricForm::Gauge:
    case MetricForm::Support: return DualStrategy::PolyhedralExact;
    case MetricForm::Generic: return DualStrategy::Sampled;
  }
  return DualStrategy::Sampled;
}

namespace {

Regularity dual_regularity(Regularity r) {
  switch (r) {
    case Regularity::LowerSemicontinuous: return Regularity::UpperSemicontinuous;
    case Regularity::UpperSemicontinuous: return Regularity::LowerSemicontinuous;
    default: return r;
  }
}

double support_value(const std::vector<Vec>& V, const Vec& h) {
  double best = 0.0;
  for (const Vec& w : V) best = std::max(best, std::abs(h.dot(w)));
  return best;
}

void check_vertex_set(const std::vector<Vec>& V, int rank, const Point& x) {
  for (const Vec& v : V) {
    if (v.size() != rank) throw Error(ErrorCode::DimensionMismatch, "vertex has wrong length");
  }
  for (const Vec& v : V) {
    const bool has_opposite = std::any_of(V.begin(), V.end(), [&](const Vec& w) {
      return (v + w).cwiseAbs().maxCoeff() <= kValidationTol * (1.0 + v.cwiseAbs().maxCoeff());
    });
    if (!has_opposite) {
      std::ostringstream os;
      os << "vertex (" << v.transpose() << ") has no opposite at x = (" << x.coords.transpose() << ")";
      throw Error(ErrorCode::AsymmetricVertexSet, os.str());
    }
  }
  Eigen::MatrixXd W(rank, static_cast<Eigen::Index>(V.size()));
  for (std::size_t c = 0; c < V.size(); ++c) W.col(static_cast<Eigen::Index>(c)) = V[c];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(W);
  lu.setThreshold(1e-10);
  if (V.empty() || lu.rank() < rank) {
    std::ostringstream os;
    os << "vertices span a subspace of dimension " << (V.empty() ? 0 : lu.rank()) << " < " << rank;
    throw Error(ErrorCode::DegenerateSpan, os.str());
  }
}

}  // namespace

std::vector<Vec> sphere_directions(int m, int count) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  if (m == 1) {
    for (int i = 0; i < count; ++i) out.push_back(Vec::Constant(1, i % 2 == 0 ? 1.0 : -1.0));
    return out;
  }
  if (m == 2) {
    for (int i = 0; i < count; ++i) {
      const double th = 2.0 * std::numbers::pi * i / count;
      Vec w(2);
      w << std::cos(th), std::sin(th);
      out.push_back(w);
    }
    return out;
  }
  if (m == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec w(3);
      w << r * std::cos(golden * i), r * std::sin(golden * i), z;
      out.push_back(w);
    }
    return out;
  }
  // Halton points pushed through a Box-Muller style map, then normalized.
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  auto radical_inverse = [](int i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * (i % base);
      i /= base;
    }
    return r;
  };
  for (int i = 1; i <= count; ++i) {
    Vec w(m);
    for (int d = 0; d < m; d += 2) {
      const double u1 = std::max(1e-12, radical_inverse(i, primes[d]));
      const double u2 = radical_inverse(i, primes[d + 1]);
      const double rad = std::sqrt(-2.0 * std::log(u1));
      w(d) = rad * std::cos(2.0 * std::numbers::pi * u2);
      if (d + 1 < m) w(d + 1) = rad * std::sin(2.0 * std::numbers::pi * u2);
    }
    const double nrm = w.norm();
    if (nrm > 0.0) out.push_back(w / nrm);
  }
  return out;
}

namespace {

double angular_gap(int m, int count) {
  if (m == 2) return std::numbers::pi / (2.0 * count);
  if (m == 3) return std::sqrt(4.0 * std::numbers::pi / count);
  return std::numbers::pi * std::pow(static_cast<double>(count), -1.0 / (m - 1));
}

}  // namespace

SubFinslerMetric make_elliptic(std::string name, int rank, MatrixField A, double alpha,
                               const std::vector<Point>& validation_points, bool base_independent,
                               Regularity regularity) {
  if (alpha < 1.0) throw Error(ErrorCode::AlphaBoundViolation, "alpha must be >= 1");
  const double lo = 1.0 / (alpha * alpha) * (1.0 - 1e-12);
  const double hi = alpha * alpha * (1.0 + 1e-12);
  for (const Point& x : validation_points) {
    const Mat a = A(x);
    if (a.rows() != rank || a.cols() != rank) throw Error(ErrorCode::DimensionMismatch, "matrix field has wrong size");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > kValidationTol * (1.0 + a.cwiseAbs().maxCoeff())) {
      throw Error(ErrorCode::AlphaBoundViolation, "matrix field is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const double emin = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().maxCoeff();
    if (emin < lo || emax > hi) {
      std::ostringstream os;
      os << "eigenvalues [" << emin << ", " << emax << "] at x = (" << x.coords.transpose() << ") outside ["
         << 1.0 / (alpha * alpha) << ", " << alpha * alpha << "]";
      throw Error(ErrorCode::AlphaBoundViolation, os.str());
    }
  }
  SubFinslerMetric phi;
  phi.name = std::move(name);
  phi.rank = rank;
  phi.alpha = alpha;
  phi.regularity = regularity;
  phi.convex = true;
  phi.base_independent = base_independent;
  phi.form = MetricForm::Elliptic;
  phi.matrix = A;
  phi.rule = [A](const Point& x, const Vec& h) { return std::sqrt(std::max(0.0, h.dot(A(x) * h))); };
  return phi;
}

SubFinslerMetric make_polyhedral(std::string name, int rank, VertexField V, double alpha,
                                 const std::vector<Point>& validation_points, bool base_independent,
                                 Regularity regularity) {
  for (const Point& x : validation_points) check_vertex_set(V(x), rank, x);
  SubFinslerMetric phi;
  phi.name = std::move(name);
  phi.rank = rank;
  phi.alpha = alpha;
  phi.regularity = regularity;
  phi.convex = true;
  phi.base_independent = base_independent;
  phi.form = MetricForm::Gauge;
  phi.vertices = V;
  phi.rule = [V](const Point& x, const Vec& h) { return polytope_gauge(V(x), h); };
  return phi;
}

SubFinslerMetric make_generic(std::string name, int rank, MetricRule rule, double alpha, Regularity regularity,
                              bool convex, bool base_independent) {
  SubFinslerMetric phi;
  phi.name = std::move(name);
  phi.rank = rank;
  phi.alpha = alpha;
  phi.regularity = regularity;
  phi.convex = convex;
  phi.base_independent = base_independent;
  phi.form = MetricForm::Generic;
  phi.rule = std::move(rule);
  return phi;
}

SubFinslerMetric make_euclidean(int rank) {
  SubFinslerMetric phi = make_elliptic(
      "euclidean", rank, [rank](const Point&) -> Mat { return Mat::Identity(rank, rank); }, 1.0, {}, true);
  phi.rule = [](const Point&, const Vec& h) { return h.norm(); };
  phi.floor = 1.0;
  return phi;
}

SubFinslerMetric scaled(const SubFinslerMetric& phi, double c) {
  SubFinslerMetric out = phi;
  std::ostringstream os;
  os << c << "*" << phi.name;
  out.name = os.str();
  out.alpha = phi.alpha * std::max(c, 1.0 / c);
  out.floor = c * phi.lower_constant();
  out.rule = [inner = phi.rule, c](const Point& x, const Vec& h) { return c * inner(x, h); };
  if (phi.form == MetricForm::Elliptic) {
    out.matrix = [inner = phi.matrix, c](const Point& x) -> Mat { return c * c * inner(x); };
  } else if (phi.form == MetricForm::Gauge) {
    out.vertices = [inner = phi.vertices, c](const Point& x) {
      auto V = inner(x);
      for (Vec& v : V) v /= c;
      return V;
    };
  } else if (phi.form == MetricForm::Support) {
    out.vertices = [inner = phi.vertices, c](const Point& x) {
      auto V = inner(x);
      for (Vec& v : V) v *= c;
      return V;
    };
  }
  return out;
}

SubFinslerMetric make_oscillating(const Group& g, double omega, double kappa) {
  const int m = g.rank();
  const int n = g.dim();
  if (m < 2) throw Error(ErrorCode::InvalidSpec, "oscillating metric needs rank >= 2");
  MatrixField A = [m, n, omega, kappa](const Point& x) -> Mat {
    const double theta = omega * (x.coords(0) - x.coords(1) + x.coords(n - 1));
    const double c = std::cos(theta), sn = std::sin(theta);
    Mat R = Mat::Identity(m, m);
    R(0, 0) = c;
    R(0, 1) = -sn;
    R(1, 0) = sn;
    R(1, 1) = c;
    Mat D = Mat::Identity(m, m);
    D(0, 0) = std::exp(kappa * sn);
    D(1, 1) = std::exp(-kappa * sn);
    return R * D * R.transpose();
  };
  std::vector<Point> validation;
  for (double r : {0.0, 0.5, 1.5, 4.0}) {
    for (const Vec& d : sphere_directions(n, 24)) validation.emplace_back(Vec(r * d));
  }
  const double alpha = std::max(2.0, std::exp(0.5 * kappa));
  std::ostringstream name;
  name << "oscillating(omega=" << omega << ")";
  return make_elliptic(name.str(), m, std::move(A), alpha, validation, false, Regularity::Continuous);
}

SubFinslerMetric make_two_phase(int rank, double interface, double low, double high, Regularity side) {
  if (!(low > 0.0 && high > 0.0)) throw Error(ErrorCode::AlphaBoundViolation, "phase values must be positive");
  if (side != Regularity::LowerSemicontinuous && side != Regularity::UpperSemicontinuous) {
    throw Error(ErrorCode::InvalidSpec, "two-phase metric is tagged lsc or usc");
  }
  const bool lower_on_interface = side == Regularity::LowerSemicontinuous;
  auto a = [=](const Point& x) {
    const double s = x.coords(0);
    if (s < interface) return low;
    if (s > interface) return high;
    return lower_on_interface ? std::min(low, high) : std::max(low, high);
  };
  MatrixField A = [a, rank](const Point& x) -> Mat { return a(x) * a(x) * Mat::Identity(rank, rank); };
  const double alpha = std::max({low, high, 1.0 / low, 1.0 / high});
  SubFinslerMetric phi = make_elliptic(lower_on_interface ? "two-phase-lsc" : "two-phase-usc", rank, std::move(A),
                                       alpha, {}, false, side);
  phi.rule = [a](const Point& x, const Vec& h) { return a(x) * h.norm(); };
  phi.floor = std::min(low, high);
  return phi;
}

SubFinslerMetric make_laminate(int rank, double frequency, double amplitude) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw Error(ErrorCode::AlphaBoundViolation, "laminate amplitude must be in [0, 1)");
  auto a = [=](const Point& x) {
    return 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * frequency * x.coords(0));
  };
  MatrixField A = [a, rank](const Point& x) -> Mat { return a(x) * a(x) * Mat::Identity(rank, rank); };
  std::ostringstream name;
  name << "laminate(n=" << frequency << ")";
  SubFinslerMetric phi = make_elliptic(name.str(), rank, std::move(A), 1.0 / (1.0 - amplitude), {}, false);
  phi.rule = [a](const Point& x, const Vec& h) { return a(x) * h.norm(); };
  phi.floor = 1.0 - amplitude;
  return phi;
}

SubFinslerMetric make_lp_gauge(int rank, const std::string& which) {
  std::vector<Vec> V;
  double alpha = 1.0;
  if (which == "l1") {
    for (int i = 0; i < rank; ++i) {
      Vec e = Vec::Zero(rank);
      e(i) = 1.0;
      V.push_back(e);
      V.push_back(-e);
    }
    alpha = std::sqrt(static_cast<double>(rank));
  } else if (which == "linf") {
    for (int mask = 0; mask < (1 << rank); ++mask) {
      Vec c(rank);
      for (int i = 0; i < rank; ++i) c(i) = (mask >> i) & 1 ? 1.0 : -1.0;
      V.push_back(c);
    }
    alpha = std::sqrt(static_cast<double>(rank));
  } else {
    throw Error(ErrorCode::UnknownBuiltin, "unknown polytope '" + which + "'");
  }
  SubFinslerMetric phi = make_polyhedral(which, rank, [V](const Point&) { return V; }, alpha, {Point(Vec::Zero(1))}, true);
  if (which == "l1") {
    phi.rule = [](const Point&, const Vec& h) { return h.lpNorm<1>(); };
  } else {
    phi.rule = [](const Point&, const Vec& h) { return h.lpNorm<Eigen::Infinity>(); };
  }
  return phi;
}

SubFinslerMetric make_nonconvex_min(int rank, double c) {
  MetricRule rule = [c](const Point&, const Vec& h) { return std::min(h.norm(), c * h.lpNorm<1>()); };
  const double alpha = std::max(1.0, 1.0 / std::min(1.0, c));
  return make_generic("nonconvex-min", rank, std::move(rule), alpha, Regularity::Continuous, false, true);
}

double polytope_gauge(const std::vector<Vec>& V, const Vec& h) {
  if (h.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::Index m = h.size();
  const Eigen::Index k = static_cast<Eigen::Index>(V.size());
  Eigen::MatrixXd A(m, k);
  for (Eigen::Index c = 0; c < k; ++c) A.col(c) = V[static_cast<std::size_t>(c)];
  const Eigen::VectorXd cost = Eigen::VectorXd::Ones(k);
  const Eigen::VectorXd b = h;
  const auto value = lp::minimize(cost, A, b);
  if (!value) throw Error(ErrorCode::DegenerateSpan, "vector outside the cone of the vertex set");
  return *value;
}

DualValue sampled_dual(const SubFinslerMetric& phi, const Point& x, const Vec& v, int resolution) {
  const int m = phi.rank;
  DualValue out;
  out.strategy = DualStrategy::Sampled;
  if (v.cwiseAbs().maxCoeff() == 0.0) return out;
  if (m == 1) {
    Vec one(1);
    one(0) = 1.0;
    out.value = std::abs(v(0)) / phi(x, one);
    return out;
  }
  auto ratio = [&](const Vec& w) {
    const double d = phi(x, w);
    return d > 0.0 ? std::abs(v.dot(w)) / d : 0.0;
  };

  double best = 0.0;
  int count = std::max(4, resolution);
  int finest = count;
  // Nested levels: count, count/2, ... down to 4; the cumulative maximum over
  // levels grows with `resolution`.
  std::vector<int> levels;
  for (int c = count; c >= 4; c /= 2) {
    levels.push_back(c);
    if (c % 2 != 0) break;
  }
  for (int level : levels) {
    if (m == 2) {
      int arg = 0;
      double level_best = -1.0;
      for (int i = 0; i < level; ++i) {
        const double th = std::numbers::pi * i / level;
        Vec w(2);
        w << std::cos(th), std::sin(th);
        const double r = ratio(w);
        if (r > level_best) {
          level_best = r;
          arg = i;
        }
      }
      // Golden-section refinement on the bracketing mesh cell.
      const double phi_g = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = std::numbers::pi * (arg - 1) / level;
      double b = std::numbers::pi * (arg + 1) / level;
      auto f = [&](double th) {
        Vec w(2);
        w << std::cos(th), std::sin(th);
        return ratio(w);
      };
      double c1 = b - phi_g * (b - a), c2 = a + phi_g * (b - a);
      double f1 = f(c1), f2 = f(c2);
      for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + phi_g * (b - a);
          f2 = f(c2);
        } else {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - phi_g * (b - a);
          f1 = f(c1);
        }
      }
      best = std::max({best, level_best, f1, f2});
    } else {
      const auto mesh = sphere_directions(m, level);
      Vec arg = mesh.front();
      double level_best = -1.0;
      for (const Vec& w : mesh) {
        const double r = ratio(w);
        if (r > level_best) {
          level_best = r;
          arg = w;
        }
      }
      // Pattern search along coordinate directions, accepting only increases.
      double stepsize = angular_gap(m, level);
      for (int it = 0; it < 40 && stepsize > 1e-12; ++it) {
        bool improved = false;
        for (int d = 0; d < m; ++d) {
          for (double sgn : {1.0, -1.0}) {
            Vec w = arg;
            w(d) += sgn * stepsize;
            w.normalize();
            const double r = ratio(w);
            if (r > level_best) {
              level_best = r;
              arg = w;
              improved = true;
            }
          }
        }
        if (!improved) stepsize *= 0.5;
      }
      best = std::max(best, level_best);
    }
  }
  out.value = best;
  const double a2 = phi.alpha * phi.alpha;
  out.error_bound = a2 * (1.0 + a2) * angular_gap(m, finest);
  return out;
}

DualValue dual_eval_detailed(const SubFinslerMetric& phi, const Point& x, const Vec& v) {
  if (v.size() != phi.rank) throw Error(ErrorCode::DimensionMismatch, "fiber vector has wrong length");
  DualValue out;
  out.strategy = phi.dual_strategy();
  switch (phi.form) {
    case MetricForm::Elliptic: {
      const Mat A = phi.matrix(x);
      out.value = std::sqrt(std::max(0.0, v.dot(A.ldlt().solve(v))));
      return out;
    }
    case MetricForm::Gauge: out.value = support_value(phi.vertices(x), v); return out;
    case MetricForm::Support: out.value = polytope_gauge(phi.vertices(x), v); return out;
    case MetricForm::Generic: return sampled_dual(phi, x, v, phi.sample_resolution);
  }
  return out;
}

double dual_eval(const SubFinslerMetric& phi, const Point& x, const Vec& v) {
  return dual_eval_detailed(phi, x, v).value;
}

SubFinslerMetric dual_metric(const SubFinslerMetric& phi) {
  SubFinslerMetric out;
  out.name = phi.name + "*";
  out.rank = phi.rank;
  out.alpha = phi.alpha;
  out.regularity = dual_regularity(phi.regularity);
  out.convex = true;
  out.base_independent = phi.base_independent;
  out.sample_resolution = phi.sample_resolution;
  switch (phi.form) {
    case MetricForm::Elliptic: {
      out.form = MetricForm::Elliptic;
      out.matrix = [A = phi.matrix](const Point& x) -> Mat { return A(x).inverse(); };
      out.rule = [A = phi.matrix](const Point& x, const Vec& h) {
        return std::sqrt(std::max(0.0, h.dot(A(x).ldlt().solve(h))));
      };
      break;
    }
    case MetricForm::Gauge:
      out.form = MetricForm::Support;
      out.vertices = phi.vertices;
      out.rule = [V = phi.vertices](const Point& x, const Vec& h) { return support_value(V(x), h); };
      break;
    case MetricForm::Support:
      out.form = MetricForm::Gauge;
      out.vertices = phi.vertices;
      out.rule = [V = phi.vertices](const Point& x, const Vec& h) { return polytope_gauge(V(x), h); };
      break;
    case MetricForm::Generic:
      out.form = MetricForm::Generic;
      out.rule = [phi](const Point& x, const Vec& h) { return sampled_dual(phi, x, h, phi.sample_resolution).value; };
      break;
  }
  return out;
}

BidualReport bidual_check(const SubFinslerMetric& phi, const std::vector<HorizontalSample>& samples) {
  BidualReport rep;
  rep.strategy = phi.dual_strategy();
  const SubFinslerMetric star = dual_metric(phi);
  double bound = phi.dual_strategy() == DualStrategy::Sampled ? 0.0 : 1e-9;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double value = phi(s.x, s.h);
    if (value <= 0.0) continue;
    const DualValue bi = dual_eval_detailed(star, s.x, s.h);
    if (bi.strategy == DualStrategy::Sampled) {
      // phi* itself is a sampled lower bound, so both layers contribute.
      const DualValue inner = sampled_dual(phi, s.x, s.h, phi.sample_resolution);
      bound = std::max(bound, bi.error_bound + inner.error_bound);
    }
    const double rel = (bi.value - value) / value;
    if (std::abs(rel) > rep.max_relative_gap) {
      rep.max_relative_gap = std::abs(rel);
      rep.worst_index = i;
    }
    rep.min_signed_gap = std::min(rep.min_signed_gap, rel);
  }
  rep.bound = bound;
  rep.passed = rep.max_relative_gap <= bound;
  return rep;
}

AxiomReport verify_metric_axioms(const SubFinslerMetric& phi, const std::vector<Point>& points,
                                 const std::vector<Vec>& vectors, double tol) {
  AxiomReport rep;
  static constexpr double lambdas[] = {-2.0, -0.5, 0.3, 1.0, 3.0};
  for (const Point& x : points) {
    for (std::size_t a = 0; a < vectors.size(); ++a) {
      const Vec& v = vectors[a];
      const double nv = v.norm();
      if (nv == 0.0) continue;
      const double val = phi(x, v);
      for (double l : lambdas) {
        const double lhs = phi(x, Vec(l * v));
        rep.homogeneity = std::max(rep.homogeneity, std::abs(lhs - std::abs(l) * val) / (std::abs(l) * nv));
      }
      const double below = nv / phi.alpha - val;
      const double above = val - phi.alpha * nv;
      rep.sandwich = std::max({rep.sandwich, below / nv, above / nv});
      if (phi.convex) {
        for (std::size_t b = 0; b < vectors.size(); ++b) {
          const Vec& w = vectors[b];
          const double scale = nv + w.norm();
          const double excess = phi(x, Vec(v + w)) - val - phi(x, w);
          rep.triangle = std::max(rep.triangle, excess / scale);
        }
      }
    }
  }
  rep.homogeneity_ok = rep.homogeneity <= tol;
  rep.sandwich_ok = rep.sandwich <= tol;
  rep.triangle_ok = !phi.convex || rep.triangle <= tol;
  return rep;
}

SemicontinuityReport semicontinuity_probe(const Group& g, const SubFinslerMetric& phi, const Point& x, const Vec& v,
                                          const std::vector<double>& radii, int samples_per_radius, double tol) {
  SemicontinuityReport rep;
  rep.value = phi(x, v);
  rep.dual_value = dual_eval(phi, x, v);
  const SubFinslerMetric star = dual_metric(phi);
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  double r_min = radii.empty() ? 0.0 : *std::min_element(radii.begin(), radii.end());
  rep.sampled_inf = rep.dual_sampled_inf = std::numeric_limits<double>::infinity();
  rep.sampled_sup = rep.dual_sampled_sup = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples_per_radius; ++s) {
    Vec dx(g.dim()), dv(phi.rank);
    for (int i = 0; i < g.dim(); ++i) dx(i) = normal(rng);
    for (int i = 0; i < phi.rank; ++i) dv(i) = normal(rng);
    dx.normalize();
    dv.normalize();
    // Points straddling the hyperplanes through x are the interesting ones:
    // half the samples are mirrored.
    if (s % 2 == 1) dx = -dx;
    const Point xs(Vec(x.coords + r_min * dx));
    const Vec vs = v + r_min * dv;
    const double val = phi(xs, vs);
    const double dval = star(xs, vs);
    rep.sampled_inf = std::min(rep.sampled_inf, val);
    rep.sampled_sup = std::max(rep.sampled_sup, val);
    rep.dual_sampled_inf = std::min(rep.dual_sampled_inf, dval);
    rep.dual_sampled_sup = std::max(rep.dual_sampled_sup, dval);
  }
  const bool check_lower = phi.regularity == Regularity::LowerSemicontinuous || phi.regularity == Regularity::Continuous;
  const bool check_upper = phi.regularity == Regularity::UpperSemicontinuous || phi.regularity == Regularity::Continuous;
  if (check_lower) {
    // phi lsc at (x, v) and phi* usc there.
    rep.lower_ok = rep.sampled_inf >= rep.value - tol && rep.dual_sampled_sup <= rep.dual_value + tol;
  }
  if (check_upper) {
    rep.upper_ok = rep.sampled_sup <= rep.value + tol && rep.dual_sampled_inf >= rep.dual_value - tol;
  }
  return rep;
}

}  // namespace sublab
