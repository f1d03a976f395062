#include <doctest.h>

#include <cmath>

#include "sublab/solver.hpp"
#include "support.hpp"

using namespace sublab;
using sublab::test::random_point;
using sublab::test::uniform_vec;
using sublab::test::vec;

namespace {

// Closed-form Heisenberg distances from the identity (circular-arc geodesics,
// evaluated with mpmath; see tests/oracles/generate.py).
struct Reference {
  double x, y, z, d;
};
constexpr Reference kHeisenberg[] = {
    {0.0, 0.0, 1.0, 3.5449077018110321},
    {0.5, -0.5, 0.25, 1.2615499938964453},
    {0.3, 0.4, 0.1, 0.79269882666437196},
    {0.0, 0.0, 0.25, 1.772453850905516},
    {0.2, 0.0, 0.3, 1.7451602648828184},
};

}  // namespace

TEST_CASE("Heisenberg distances bracket the closed form") {
  const auto g = builtin_group("heisenberg1");
  const SolverConfig cfg;
  for (const auto& r : kHeisenberg) {
    CAPTURE(r.z);
    const auto e = cc_distance(g, g->identity(), g->point({r.x, r.y, r.z}), cfg);
    CHECK(e.converged);
    CHECK(e.lower <= r.d);
    CHECK(e.upper >= r.d * (1.0 - 1e-9));  // an explicit curve is never shorter than a geodesic
    CHECK(e.upper <= r.d * 1.01);
    CHECK(e.endpoint_gap <= cfg.endpoint_tol);
  }
}

TEST_CASE("trivial and first-layer queries pinch") {
  const auto g = builtin_group("heisenberg1");
  const SolverConfig cfg;
  const Point x = g->point({0.3, -0.1, 0.7});
  const auto zero = cc_distance(g, x, x, cfg);
  CHECK(zero.upper == 0.0);
  CHECK(zero.lower == 0.0);

  const auto e = cc_distance(g, g->identity(), g->exp_horizontal(vec({1, 0})), cfg);
  CHECK(e.lower == 1.0);
  CHECK(e.upper == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.lower_witness == "first-layer");

  CHECK(first_layer_lower_bound(*g, make_euclidean(2), g->identity(), g->point({0, 0, 1})) == 0.0);
  CHECK(first_layer_lower_bound(*g, make_euclidean(2), x, x) == 0.0);
  CHECK(first_layer_lower_bound(*g, make_lp_gauge(2, "l1"), g->identity(), g->point({0.3, 0.4, 5})) ==
        doctest::Approx(0.5 / std::sqrt(2.0)));
}

TEST_CASE("refinement agrees with the coarse grid") {
  const auto g = builtin_group("heisenberg1");
  SolverConfig coarse;
  coarse.multistarts = 4;
  SolverConfig fine = coarse;
  fine.segments = 256;
  const Point y = g->point({0, 0, 1});
  const double a = cc_distance(g, g->identity(), y, coarse).upper;
  const double b = cc_distance(g, g->identity(), y, fine).upper;
  CHECK(std::abs(a - b) <= 0.02 * b);

  SolverConfig refined = coarse;
  refined.refine_levels = 1;
  CHECK(cc_distance(g, g->identity(), y, refined).upper <= a);
}

TEST_CASE("dilation and translation covariance") {
  const auto g = builtin_group("heisenberg1");
  SolverConfig cfg;
  cfg.multistarts = 4;
  const Point p = g->point({0.4, 0.2, 0.3});
  const double base = cc_distance(g, g->identity(), p, cfg).upper;
  for (double l : {0.5, 2.0}) {
    const double d = cc_distance(g, g->identity(), g->dilate(l, p), cfg).upper;
    CHECK(d / base == doctest::Approx(l).epsilon(0.01));
  }
  const Point t = g->point({-1.0, 0.5, 2.0});
  const double moved = cc_distance(g, t, g->mul(t, p), cfg).upper;
  CHECK(moved == doctest::Approx(base).epsilon(0.01));
}

TEST_CASE("nonconvex metrics are refused") {
  const auto g = builtin_group("heisenberg1");
  try {
    (void)solve_distance(g, make_nonconvex_min(2), g->identity(), g->point({1, 0, 0}), SolverConfig{});
    FAIL("expected NotConvexMetric");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotConvexMetric);
  }
}

TEST_CASE("oracle symmetry, triangle inequality and determinism") {
  const auto g = builtin_group("heisenberg1");
  SolverConfig cfg;
  cfg.multistarts = 3;
  cfg.segments = 32;
  cfg.seed = 42;
  const DistanceOracle d(g, make_oscillating(*g), cfg);
  std::mt19937_64 rng(13);
  std::vector<Point> pts;
  for (int k = 0; k < 4; ++k) pts.push_back(random_point(rng, *g, -0.5, 0.5));

  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const auto a = d.estimate(pts[i], pts[j]);
      const auto b = d.estimate(pts[j], pts[i]);
      CHECK(a.upper == b.upper);
      CHECK(a.lower <= a.upper);
    }
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(d.upper(pts[i], pts[k]) <= d.upper(pts[i], pts[j]) + d.upper(pts[j], pts[k]) + 3e-6);
      }
    }
  }

  std::vector<std::pair<Point, Point>> queries;
  for (std::size_t i = 1; i < pts.size(); ++i) queries.emplace_back(pts[0], pts[i]);
  const DistanceOracle d1(g, make_oscillating(*g), cfg), d4(g, make_oscillating(*g), cfg);
  const auto r1 = d1.batch(queries, 1);
  const auto r4 = d4.batch(queries, 4);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    CHECK(r1[q].upper == r4[q].upper);
    CHECK(r1[q].lower == r4[q].lower);
    CHECK(r1[q].upper == d.upper(queries[q].first, queries[q].second));
  }
  CHECK(d1.cache_size() == queries.size());
}

TEST_CASE("competitor lower bounds") {
  const auto g = builtin_group("heisenberg1");
  CHECK(competitor_lower_bound({}, g->identity(), g->point({0, 0, 1})) == 0.0);
  // f = x1 is 1-Lipschitz for the fiber norm; f = 2 x1 with margin 1 deflates to the same bound.
  const ValidatedFunction f{[](const Point& p) { return p.coords(0); }, 0.0, "x1"};
  const ValidatedFunction f2{[](const Point& p) { return 2.0 * p.coords(0); }, 1.0, "2x1"};
  const Point y = g->point({0.7, 0.1, 0.4});
  CHECK(competitor_lower_bound({f}, g->identity(), y) == doctest::Approx(0.7));
  CHECK(competitor_lower_bound({f2}, g->identity(), y) == doctest::Approx(0.7));
  SolverConfig cfg;
  cfg.multistarts = 2;
  const auto e = solve_distance(g, make_euclidean(2), g->identity(), g->point({0, 0, 0.5}), cfg, {f});
  CHECK(e.lower <= e.upper);
}

TEST_CASE("equivalence with the CC distance and Holder envelope") {
  const auto g = builtin_group("heisenberg1");
  SolverConfig cfg;
  cfg.multistarts = 2;
  cfg.segments = 32;
  Mat A(2, 2);
  A << 2.0, 1.0, 1.0, 1.5;  // eigenvalues 0.72 and 2.78, inside [1/4, 4]
  const auto phi = make_elliptic("A", 2, [A](const Point&) { return A; }, 2.0, {g->identity()}, true);
  const DistanceOracle d(g, phi, cfg), dcc(g, make_euclidean(2), cfg);
  std::vector<Point> grid;
  for (double a : {-0.5, 0.5}) {
    for (double b : {-0.5, 0.5}) grid.push_back(g->point({a, b, 0.25 * a * b}));
  }
  const auto rep = dcc_equivalence_report(d, dcc, grid, 2.0);
  CHECK(rep.passed());
  CHECK(rep.pairs == 6);
  CHECK(rep.holder_constant >= 1.0);
  CHECK(std::isfinite(rep.holder_constant));
  CHECK(dcc_equivalence_report(dcc, dcc, grid, 1.0).passed());
}

TEST_CASE("metric spheres") {
  const auto g = builtin_group("abelian2");
  SolverConfig cfg;
  cfg.multistarts = 1;
  cfg.segments = 8;
  const DistanceOracle eu(g, make_euclidean(2), cfg);
  for (const Point& p : sphere_sample(eu, g->identity(), 0.7, 16)) CHECK(p.coords.norm() == doctest::Approx(0.7).epsilon(0.01));
  const DistanceOracle l1(g, make_lp_gauge(2, "l1"), cfg);
  for (const Point& p : sphere_sample(l1, g->identity(), 1.0, 16)) CHECK(p.coords.lpNorm<1>() == doctest::Approx(1.0).epsilon(0.02));

  const auto h = builtin_group("heisenberg1");
  SolverConfig hc;
  hc.multistarts = 2;
  hc.segments = 32;
  const DistanceOracle dh(h, make_euclidean(2), hc);
  const auto small = sphere_sample(dh, h->identity(), 0.5, 6);
  const auto big = sphere_sample(dh, h->identity(), 1.0, 6);
  for (std::size_t k = 0; k < small.size(); ++k) {
    const Point scaled_up = h->dilate(2.0, small[k]);
    CHECK(h->gauge(h->relative(scaled_up, big[k]).coords) <= 0.02 * h->gauge(big[k].coords));
  }
}

TEST_CASE("endpoint gap uses the homogeneous gauge") {
  const auto g = builtin_group("heisenberg1");
  CHECK(endpoint_gap(*g, g->identity(), g->point({0, 0, 0.04}), 64) == doctest::Approx(0.2));
  CHECK(endpoint_gap(*g, g->point({1, 2, 3}), g->point({1, 2, 3}), 64) == 0.0);
}
