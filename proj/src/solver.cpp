#include "sublab/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sublab/parallel.hpp"

namespace sublab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_point(std::uint64_t h, const Point& p) {
  for (int i = 0; i < p.dim(); ++i) h = splitmix(h ^ std::bit_cast<std::uint64_t>(p.coords(i) + 0.0));
  return h;
}

// Controls are stored as an m x N matrix, column j holding h_j.
using Controls = Eigen::MatrixXd;

struct Trajectory {
  std::vector<Vec> nodes;  // N + 1 points
  std::vector<Vec> mids;   // empty for base-independent metrics
};

struct Evaluation {
  double value = 0.0;
  Controls grad;  // plain (not L2) gradient
};

class Problem {
 public:
  Problem(const Group& g, const SubFinslerMetric& phi, const Point& x, const Point& y, int segments,
          const SolverConfig& cfg)
      : g_(g), phi_(phi), x_(x), y_(y), cfg_(cfg), N_(segments), m_(g.rank()), n_(g.dim()),
        dt_(1.0 / segments) {
    scale_ = std::max(g.gauge(g.relative(x, y).coords), 1e-300);
    row_scale_ = Vec(n_);
    rho_ = Vec(n_);
    for (int i = 0; i < n_; ++i) {
      row_scale_(i) = std::pow(scale_, g.weight(i));
      // Smoothing radius for the penalty gauge.
      rho_(i) = std::pow(0.01 * scale_, g.weight(i));
    }
  }

  [[nodiscard]] int segments() const { return N_; }
  [[nodiscard]] double scale() const { return scale_; }

  [[nodiscard]] Vec step_vector(const Controls& H, int j, double fraction) const {
    Vec u = Vec::Zero(n_);
    u.head(m_) = fraction * dt_ * H.col(j);
    return u;
  }

  [[nodiscard]] Trajectory forward(const Controls& H) const {
    Trajectory tr;
    tr.nodes.reserve(static_cast<std::size_t>(N_) + 1);
    tr.nodes.push_back(x_.coords);
    if (!phi_.base_independent) tr.mids.reserve(static_cast<std::size_t>(N_));
    for (int j = 0; j < N_; ++j) {
      const Vec& cur = tr.nodes.back();
      if (!phi_.base_independent) tr.mids.push_back(g_.bch(cur, step_vector(H, j, 0.5)));
      tr.nodes.push_back(g_.bch(cur, step_vector(H, j, 1.0)));
    }
    return tr;
  }

  [[nodiscard]] Vec residual(const Trajectory& tr) const { return g_.bch(-tr.nodes.back(), y_.coords); }

  [[nodiscard]] double gap(const Trajectory& tr) const {
    return endpoint_gap(g_, Point(tr.nodes.back()), y_, N_);
  }

  [[nodiscard]] bool feasible(const Trajectory& tr) const {
    return gap(tr) <= cfg_.endpoint_tol * std::min(1.0, scale_);
  }

  [[nodiscard]] double length(const Controls& H, const Trajectory& tr) const {
    double total = 0.0;
    for (int j = 0; j < N_; ++j) total += dt_ * phi_(base(tr, j), Vec(H.col(j)));
    return total;
  }

  [[nodiscard]] double energy(const Controls& H, const Trajectory& tr) const {
    double total = 0.0;
    for (int j = 0; j < N_; ++j) {
      const double v = phi_(base(tr, j), Vec(H.col(j)));
      total += dt_ * v * v;
    }
    return total;
  }

  // Sum_j dt phi^power + w * smoothed gauge of the endpoint residual.
  [[nodiscard]] double objective(const Controls& H, int power, double penalty) const {
    const Trajectory tr = forward(H);
    double value = power == 2 ? energy(H, tr) : length(H, tr);
    if (penalty > 0.0) {
      const Vec z = residual(tr);
      for (int i = 0; i < n_; ++i) {
        const double inv_w = 1.0 / g_.weight(i);
        value += penalty * (std::pow(z(i) * z(i) + rho_(i) * rho_(i), 0.5 * inv_w) - std::pow(rho_(i), inv_w));
      }
    }
    return value;
  }

  [[nodiscard]] Evaluation evaluate(const Controls& H, int power, double penalty) const {
    const Trajectory tr = forward(H);
    Evaluation ev;
    ev.grad = Controls::Zero(m_, N_);
    Eigen::RowVectorXd lambda = Eigen::RowVectorXd::Zero(n_);
    if (penalty > 0.0) {
      const Vec z = residual(tr);
      Eigen::RowVectorXd dG(n_);
      for (int i = 0; i < n_; ++i) {
        const double inv_w = 1.0 / g_.weight(i);
        const double q = z(i) * z(i) + rho_(i) * rho_(i);
        ev.value += penalty * (std::pow(q, 0.5 * inv_w) - std::pow(rho_(i), inv_w));
        dG(i) = penalty * inv_w * std::pow(q, 0.5 * inv_w - 1.0) * z(i);
      }
      const Vec neg_end = -tr.nodes.back();
      lambda = -(dG * g_.d_bch_left(neg_end, y_.coords));
    }
    for (int j = N_ - 1; j >= 0; --j) {
      const Vec& node = tr.nodes[static_cast<std::size_t>(j)];
      const Vec h = H.col(j);
      const Point where = base(tr, j);
      double value = 0.0;
      Vec dh(m_), dx(n_);
      derivatives(where, h, value, dh, dx);
      const double outer = power == 2 ? 2.0 * value : 1.0;
      ev.value += dt_ * (power == 2 ? value * value : value);
      const Vec u = step_vector(H, j, 1.0);
      Eigen::RowVectorXd gh = (lambda * g_.d_bch_right(node, u)).head(m_) * dt_;
      gh += outer * dt_ * dh.transpose();
      Eigen::RowVectorXd next = lambda * g_.d_bch_left(node, u);
      if (!phi_.base_independent) {
        const Eigen::RowVectorXd gx = outer * dt_ * dx.transpose();
        const Vec half = step_vector(H, j, 0.5);
        gh += (gx * g_.d_bch_right(node, half)).head(m_) * (0.5 * dt_);
        next += gx * g_.d_bch_left(node, half);
      }
      ev.grad.col(j) = gh.transpose();
      lambda = next;
    }
    return ev;
  }

  // d z / d H with rows scaled by scale^weight; columns j*m + k.
  [[nodiscard]] Eigen::MatrixXd endpoint_jacobian(const Controls& H, const Trajectory& tr) const {
    Eigen::MatrixXd J(n_, static_cast<Eigen::Index>(m_) * N_);
    const Vec neg_end = -tr.nodes.back();
    Eigen::MatrixXd P = -g_.d_bch_left(neg_end, y_.coords);
    for (int i = 0; i < n_; ++i) P.row(i) /= row_scale_(i);
    for (int j = N_ - 1; j >= 0; --j) {
      const Vec& node = tr.nodes[static_cast<std::size_t>(j)];
      const Vec u = step_vector(H, j, 1.0);
      J.middleCols(static_cast<Eigen::Index>(j) * m_, m_) = (P * g_.d_bch_right(node, u)).leftCols(m_) * dt_;
      P = P * g_.d_bch_left(node, u);
    }
    return J;
  }

  [[nodiscard]] Eigen::VectorXd scaled_residual(const Trajectory& tr) const {
    const Vec z = residual(tr);
    Eigen::VectorXd r(n_);
    for (int i = 0; i < n_; ++i) r(i) = z(i) / row_scale_(i);
    return r;
  }

  // Damped minimum-norm Gauss-Newton on the endpoint equation.
  bool project(Controls& H, int max_newton) const {
    Trajectory tr = forward(H);
    Eigen::VectorXd r = scaled_residual(tr);
    for (int it = 0; it < max_newton; ++it) {
      if (gap(tr) <= 1e-3 * cfg_.endpoint_tol * std::min(1.0, scale_)) return true;
      const Eigen::MatrixXd J = endpoint_jacobian(H, tr);
      const Eigen::VectorXd delta = J.completeOrthogonalDecomposition().solve(-r);
      if (!delta.allFinite()) break;
      const Eigen::Map<const Controls> D(delta.data(), m_, N_);
      bool accepted = false;
      for (double t = 1.0; t > 1e-4; t *= 0.5) {
        Controls trial = H + t * D;
        Trajectory ttr = forward(trial);
        Eigen::VectorXd tr_r = scaled_residual(ttr);
        if (tr_r.norm() < (1.0 - 1e-4 * t) * r.norm()) {
          H = std::move(trial);
          tr = std::move(ttr);
          r = std::move(tr_r);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    return feasible(tr);
  }

  // Penalty phase: gradient descent on length + w * gap for each weight.
  void penalty_descent(Controls& H) const {
    // Penalty weights are relative to the metric's size along the start, so
    // that c * phi follows the same path as phi.
    const double cc = dt_ * H.colwise().norm().sum();
    const double size = cc > 0.0 ? length(H, forward(H)) / cc : 1.0;
    for (double w0 : cfg_.penalty_schedule) {
      const double w = w0 * size;
      double tau = 0.1 * scale_;
      Evaluation ev = evaluate(H, 1, w);
      bool done = false;
      for (int it = 0; it < cfg_.penalty_iters && !done; ++it) {
        const Controls dir = -ev.grad / dt_;
        const double slope = (ev.grad.array() * dir.array()).sum();
        if (!(slope < 0.0)) break;
        bool accepted = false;
        for (int k = 0; k < 30; ++k) {
          Controls trial = H + tau * dir;
          const double value = objective(trial, 1, w);
          if (value <= ev.value + 1e-4 * tau * slope) {
            const double drop = ev.value - value;
            H = std::move(trial);
            ev = evaluate(H, 1, w);
            accepted = true;
            tau *= 2.0;
            done = drop <= cfg_.step_tol * std::max(ev.value, scale_);
            break;
          }
          tau *= 0.5;
        }
        if (!accepted) done = true;
      }
    }
  }

  // Reduced-gradient descent of the energy on the endpoint constraint.
  int polish(Controls& H, bool& stationary) const {
    stationary = false;
    Trajectory tr = forward(H);
    auto tangent = [&](const Controls& Hc, const Trajectory& trc, Evaluation& ev) {
      ev = evaluate(Hc, 2, 0.0);
      const Eigen::MatrixXd J = endpoint_jacobian(Hc, trc);
      const Eigen::Map<const Eigen::VectorXd> g(ev.grad.data(), ev.grad.size());
      const Eigen::VectorXd gl2 = g / dt_;
      const Eigen::VectorXd mu = J.transpose().completeOrthogonalDecomposition().solve(gl2);
      Controls p = Eigen::Map<const Controls>(Eigen::VectorXd(gl2 - J.transpose() * mu).data(), m_, N_);
      return p;
    };
    Evaluation ev;
    Controls p = tangent(H, tr, ev);
    double tau = 0.5;
    int it = 0;
    for (; it < cfg_.max_iters; ++it) {
      const double pnorm = std::sqrt(dt_ * p.squaredNorm());
      if (pnorm <= 1e-9 * std::sqrt(std::max(ev.value, 1e-300))) {
        stationary = true;
        break;
      }
      const double slope = -(ev.grad.array() * p.array()).sum();
      bool accepted = false;
      Controls next;
      Trajectory ntr;
      double nvalue = 0.0;
      double t = tau;
      for (int k = 0; k < 40; ++k, t *= 0.5) {
        Controls trial = H - t * p;
        if (!project(trial, 6)) continue;
        Trajectory ttr = forward(trial);
        const double e = energy(trial, ttr);
        if (e <= ev.value + 1e-4 * t * slope) {
          next = std::move(trial);
          ntr = std::move(ttr);
          nvalue = e;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        stationary = true;
        break;
      }
      const double drop = ev.value - nvalue;
      const Controls s = next - H;
      Evaluation nev;
      Controls np = tangent(next, ntr, nev);
      const Controls yk = np - p;
      const double sy = (s.array() * yk.array()).sum();
      tau = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-6, 10.0) : std::min(2.0 * t, 10.0);
      H = std::move(next);
      tr = std::move(ntr);
      ev = std::move(nev);
      p = std::move(np);
      if (drop <= cfg_.step_tol * ev.value && s.norm() <= std::sqrt(cfg_.step_tol) * H.norm()) {
        stationary = true;
        ++it;
        break;
      }
    }
    return it;
  }

 private:
  [[nodiscard]] Point base(const Trajectory& tr, int j) const {
    return Point(phi_.base_independent ? tr.nodes[static_cast<std::size_t>(j)] : tr.mids[static_cast<std::size_t>(j)]);
  }

  void derivatives(const Point& where, const Vec& h, double& value, Vec& dh, Vec& dx) const {
    const double hn = h.norm();
    if (phi_.form == MetricForm::Elliptic) {
      const Mat A = phi_.matrix(where);
      const Vec Ah = A * h;
      value = std::sqrt(std::max(0.0, h.dot(Ah)));
      dh = value > 0.0 ? Vec(Ah / value) : Vec(Vec::Zero(m_));
    } else {
      value = phi_(where, h);
      const double s = cfg_.fd_step * std::max(hn, scale_);
      for (int k = 0; k < m_; ++k) {
        Vec hp = h, hm = h;
        hp(k) += s;
        hm(k) -= s;
        dh(k) = (phi_(where, hp) - phi_(where, hm)) / (2.0 * s);
      }
    }
    if (phi_.base_independent) {
      dx.setZero();
      return;
    }
    if (phi_.form == MetricForm::Elliptic) {
      for (int i = 0; i < n_; ++i) {
        const double s = cfg_.fd_step * std::max(1.0, std::abs(where.coords(i)));
        Point xp = where, xm = where;
        xp.coords(i) += s;
        xm.coords(i) -= s;
        const double vp = std::sqrt(std::max(0.0, h.dot(phi_.matrix(xp) * h)));
        const double vm = std::sqrt(std::max(0.0, h.dot(phi_.matrix(xm) * h)));
        dx(i) = (vp - vm) / (2.0 * s);
      }
      return;
    }
    for (int i = 0; i < n_; ++i) {
      const double s = cfg_.fd_step * std::max(1.0, std::abs(where.coords(i)));
      Point xp = where, xm = where;
      xp.coords(i) += s;
      xm.coords(i) -= s;
      dx(i) = (phi_(xp, h) - phi_(xm, h)) / (2.0 * s);
    }
  }

  const Group& g_;
  const SubFinslerMetric& phi_;
  const Point& x_;
  const Point& y_;
  const SolverConfig& cfg_;
  int N_, m_, n_;
  double dt_;
  double scale_ = 0.0;
  Vec row_scale_;
  Vec rho_;
};

Controls straight_controls(const Group& g, const Point& x, const Point& y, int N) {
  const Vec v = g.layer1(g.relative(x, y).coords);
  return v.replicate(1, N);
}

Controls perturbed_controls(const Group& g, const Point& x, const Point& y, int N, double scale, std::uint64_t seed) {
  Controls H = straight_controls(g, x, y, N);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int m = g.rank();
  for (int k = 1; k <= 3; ++k) {
    Vec a(m), b(m);
    for (int i = 0; i < m; ++i) a(i) = normal(rng) * 2.0 * scale / k;
    for (int i = 0; i < m; ++i) b(i) = normal(rng) * 2.0 * scale / k;
    for (int j = 0; j < N; ++j) {
      const double t = (j + 0.5) / N;
      H.col(j) += a * std::cos(2.0 * std::numbers::pi * k * t) + b * std::sin(2.0 * std::numbers::pi * k * t);
    }
  }
  return H;
}

Controls controls_from_curve(const HorizontalCurve& c, int N) {
  const Control& ctl = c.control();
  if (ctl.uniform() && ctl.segments() == N) {
    Controls H(ctl.rank(), N);
    for (int j = 0; j < N; ++j) H.col(j) = ctl.value(j);
    return H;
  }
  Controls H(ctl.rank(), N);
  for (int j = 0; j < N; ++j) H.col(j) = ctl.value(ctl.piece((j + 0.5) / N));
  return H;
}

HorizontalCurve to_curve(const GroupPtr& g, const Point& x, const Controls& H) {
  std::vector<Vec> values;
  values.reserve(static_cast<std::size_t>(H.cols()));
  for (Eigen::Index j = 0; j < H.cols(); ++j) values.emplace_back(H.col(j));
  return HorizontalCurve(g, x, Control(std::move(values)));
}

struct Candidate {
  Controls H;
  double length = std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool stationary = false;
  int iterations = 0;
};

Candidate run_start(const Problem& prob, Controls H, bool use_penalty, bool use_polish = true) {
  Candidate c;
  if (use_penalty) prob.penalty_descent(H);
  if (!prob.project(H, 30)) return c;
  if (use_polish) {
    c.iterations = prob.polish(H, c.stationary);
  } else {
    c.stationary = true;
  }
  const auto tr = prob.forward(H);
  c.feasible = prob.feasible(tr);
  c.length = prob.length(H, tr);
  c.H = std::move(H);
  return c;
}

std::string key_of(const Point& x, const Point& y) {
  std::string key;
  key.reserve(static_cast<std::size_t>(x.dim() + y.dim()) * sizeof(double) + 1);
  auto put = [&](const Point& p) {
    for (int i = 0; i < p.dim(); ++i) {
      const double v = p.coords(i) + 0.0;
      key.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
  };
  put(x);
  key.push_back('|');
  put(y);
  return key;
}

bool lex_less(const Point& a, const Point& b) {
  for (int i = 0; i < a.dim(); ++i) {
    if (a.coords(i) != b.coords(i)) return a.coords(i) < b.coords(i);
  }
  return false;
}

DistanceEstimate reversed(DistanceEstimate e) {
  e.curve = reverse(e.curve);
  return e;
}

}  // namespace

double endpoint_gap(const Group& g, const Point& reached, const Point& target, int segments) {
  const Vec z = g.relative(reached, target).coords;
  // Rounding floor: each of the `segments` products perturbs layer-w
  // coordinates by about eps * size^w.
  double size = 1.0;
  for (int i = 0; i < g.dim(); ++i) {
    const double a = std::pow(std::abs(target.coords(i)), 1.0 / g.weight(i));
    const double b = std::pow(std::abs(reached.coords(i)), 1.0 / g.weight(i));
    size = std::max({size, a, b});
  }
  double total = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    const double floor = 16.0 * kEps * (segments + 1) * std::pow(size, g.weight(i));
    const double excess = std::abs(z(i)) - floor;
    if (excess > 0.0) total += std::pow(excess, 1.0 / g.weight(i));
  }
  return total;
}

double first_layer_lower_bound(const Group& g, const SubFinslerMetric& phi, const Point& x, const Point& y) {
  return g.layer1(g.relative(x, y).coords).norm() * phi.lower_constant();
}

double competitor_lower_bound(const std::vector<ValidatedFunction>& competitors, const Point& x, const Point& y) {
  double best = 0.0;
  for (const auto& c : competitors) best = std::max(best, std::abs(c.f(x) - c.f(y)) / (1.0 + c.margin));
  return best;
}

DistanceEstimate solve_distance(const GroupPtr& g, const SubFinslerMetric& phi, const Point& x, const Point& y,
                                const SolverConfig& cfg, const std::vector<ValidatedFunction>& competitors,
                                const HorizontalCurve* warm_start) {
  if (!phi.convex) throw Error(ErrorCode::NotConvexMetric, "metric '" + phi.name + "' is not flagged convex");
  if (x.dim() != g->dim() || y.dim() != g->dim()) throw Error(ErrorCode::DimensionMismatch, "query point has wrong dimension");
  if (phi.rank != g->rank()) throw Error(ErrorCode::DimensionMismatch, "metric rank differs from group rank");

  DistanceEstimate est;
  const double first = first_layer_lower_bound(*g, phi, x, y);
  const double comp = competitor_lower_bound(competitors, x, y);
  est.lower = first;
  est.lower_witness = "first-layer";
  if (comp > first) {
    est.lower = comp;
    est.lower_witness = "competitor";
    for (const auto& c : competitors) {
      if (std::abs(c.f(x) - c.f(y)) / (1.0 + c.margin) == comp) {
        if (!c.label.empty()) est.lower_witness = "competitor:" + c.label;
        break;
      }
    }
  }
  if (x == y) {
    est.curve = HorizontalCurve(g, x, Control(std::vector<Vec>(static_cast<std::size_t>(cfg.segments), Vec::Zero(g->rank()))));
    est.upper = est.lower = 0.0;
    est.converged = true;
    return est;
  }

  int N = cfg.segments;
  Candidate best;
  {
    const Problem prob(*g, phi, x, y, N, cfg);
    if (warm_start != nullptr) {
      // Transport only: the minimum-norm projection of an optimal curve moves
      // its length to first order exactly, without polish noise.
      best = run_start(prob, controls_from_curve(*warm_start, N), false, false);
    } else {
      const std::uint64_t base_seed = mix_point(mix_point(splitmix(cfg.seed), x), y);
      for (int s = 0; s < std::max(1, cfg.multistarts); ++s) {
        Controls H0 = s == 0 ? straight_controls(*g, x, y, N)
                             : perturbed_controls(*g, x, y, N, prob.scale(), splitmix(base_seed + static_cast<std::uint64_t>(s)));
        // The straight start is already near-feasible for most targets; the
        // penalty phase only serves the perturbed ones.
        Candidate c = run_start(prob, std::move(H0), s != 0);
        if (c.feasible && c.length < best.length) best = std::move(c);
        // A curve whose length meets the certified lower bound is optimal.
        if (best.feasible && best.length <= est.lower * (1.0 + 1e-12)) break;
      }
    }
  }
  if (!best.feasible) {
    std::ostringstream os;
    os << "no start reached the endpoint within " << cfg.endpoint_tol << " for metric '" << phi.name << "'";
    throw Error(ErrorCode::NoFeasibleCurve, os.str());
  }
  for (int level = 0; level < cfg.refine_levels; ++level) {
    N *= 2;
    const Problem prob(*g, phi, x, y, N, cfg);
    Controls H(best.H.rows(), N);
    for (int j = 0; j < N; ++j) H.col(j) = best.H.col(j / 2);
    Candidate c = run_start(prob, std::move(H), false);
    if (c.feasible && c.length <= best.length) best = std::move(c);
  }

  est.curve = to_curve(g, x, best.H);
  // The optimizer sees midpoint samples only and can park them in cheap
  // spots of an oscillating metric, so the reported length is measured again.
  est.upper = est.curve.accurate_length(phi);
  est.endpoint_gap = endpoint_gap(*g, est.curve.endpoint(), y, static_cast<int>(best.H.cols()));
  const bool feasible = est.endpoint_gap <= cfg.endpoint_tol * std::min(1.0, g->gauge(g->relative(x, y).coords));
  est.converged = feasible && best.stationary;
  est.iterations = best.iterations;
  if (est.lower > est.upper) {
    // Only possible through midpoint quadrature of a base-dependent metric.
    est.lower = est.upper;
    est.lower_witness += " (clamped to quadrature length)";
  }
  return est;
}

DistanceEstimate cc_distance(const GroupPtr& g, const Point& x, const Point& y, const SolverConfig& cfg) {
  return solve_distance(g, make_euclidean(g->rank()), x, y, cfg);
}

DistanceOracle::DistanceOracle(GroupPtr g, SubFinslerMetric phi, SolverConfig cfg,
                               std::vector<ValidatedFunction> competitors)
    : group_(std::move(g)), phi_(std::move(phi)), cfg_(std::move(cfg)), competitors_(std::move(competitors)) {}

DistanceEstimate DistanceOracle::estimate(const Point& x, const Point& y) const {
  const bool swap = lex_less(y, x);
  const Point& a = swap ? y : x;
  const Point& b = swap ? x : y;
  const std::string key = key_of(a, b);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return swap ? reversed(it->second) : it->second;
  }
  DistanceEstimate e = solve_distance(group_, phi_, a, b, cfg_, competitors_);
  {
    std::lock_guard lock(mutex_);
    cache_.emplace(key, e);
  }
  return swap ? reversed(std::move(e)) : e;
}

DistanceEstimate DistanceOracle::estimate_warm(const Point& x, const Point& y, const HorizontalCurve& warm) const {
  return solve_distance(group_, phi_, x, y, cfg_, competitors_, &warm);
}

std::vector<DistanceEstimate> DistanceOracle::batch(const std::vector<std::pair<Point, Point>>& queries,
                                                    int threads) const {
  std::vector<DistanceEstimate> out(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = estimate(queries[i].first, queries[i].second); });
  return out;
}

std::size_t DistanceOracle::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

EquivalenceReport dcc_equivalence_report(const DistanceOracle& d, const DistanceOracle& dcc,
                                         const std::vector<Point>& grid, double alpha, int threads) {
  std::vector<std::pair<Point, Point>> pairs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) pairs.emplace_back(grid[i], grid[j]);
  }
  const auto ed = d.batch(pairs, threads);
  const auto ec = dcc.batch(pairs, threads);
  const Group& g = *dcc.group();
  const double k = g.step();
  EquivalenceReport rep;
  rep.pairs = pairs.size();
  rep.worst_ratio_low = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& a = ed[p];
    const auto& c = ec[p];
    if (a.lower > alpha * c.upper || c.lower > alpha * a.upper) ++rep.certified_violations;
    if (a.upper > alpha * c.upper * (1.0 + 1e-9) || c.upper > alpha * a.upper * (1.0 + 1e-9)) ++rep.estimate_violations;
    const double ratio = a.upper / c.upper;
    rep.worst_ratio_low = std::min(rep.worst_ratio_low, ratio);
    rep.worst_ratio_high = std::max(rep.worst_ratio_high, ratio);
    const double eu = (pairs[p].first.coords - pairs[p].second.coords).norm();
    rep.holder_constant = std::max({rep.holder_constant, eu / c.upper, c.upper / std::pow(eu, 1.0 / k)});
  }
  if (pairs.empty()) rep.worst_ratio_low = 1.0;
  return rep;
}

std::vector<Point> sphere_sample(const DistanceOracle& d, const Point& center, double r, int directions) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidSpec, "sphere radius must be positive");
  const Group& g = *d.group();
  std::vector<Point> out;
  for (const Vec& dir : sphere_directions(g.dim(), directions)) {
    // Normalize the direction to unit gauge so dilation parameters are comparable.
    const Point u = g.dilate(1.0 / g.gauge(dir), Point(dir));
    auto dist = [&](double lambda) { return d.upper(center, g.mul(center, g.dilate(lambda, u))); };
    double lo = 0.0;
    double hi = r / dist(1.0);
    double mid = hi;
    const double first = dist(hi);
    if (std::abs(first - r) <= 1e-3 * r) {
      out.push_back(g.mul(center, g.dilate(mid, u)));
      continue;
    }
    if (first > r) {
      lo = 0.0;
    } else {
      while (dist(hi) < r) {
        lo = hi;
        hi *= 1.5;
      }
    }
    for (int it = 0; it < 60; ++it) {
      mid = 0.5 * (lo + hi);
      const double v = dist(mid);
      if (std::abs(v - r) <= 1e-3 * r) break;
      (v < r ? lo : hi) = mid;
    }
    out.push_back(g.mul(center, g.dilate(mid, u)));
  }
  return out;
}

}  // namespace sublab
