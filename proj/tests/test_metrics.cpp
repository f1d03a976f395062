#include <doctest.h>

#include <cmath>

#include "sublab/metrics.hpp"
#include "support.hpp"

using namespace sublab;
using sublab::test::random_point;
using sublab::test::uniform_vec;
using sublab::test::vec;

namespace {

std::vector<HorizontalSample> samples(const Group& g, int m, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<HorizontalSample> out;
  for (int k = 0; k < count; ++k) out.push_back({random_point(rng, g), uniform_vec(rng, m, -1.0, 1.0)});
  return out;
}

SubFinslerMetric hexagon() {
  const std::vector<Vec> V{vec({1, 0}),   vec({0.5, 0.8}),   vec({-0.5, 0.8}),
                           vec({-1, 0}),  vec({-0.5, -0.8}), vec({0.5, -0.8})};
  return make_polyhedral("hex", 2, [V](const Point&) { return V; }, 2.0, {Point(Vec::Zero(3))}, true);
}

// A = [[2, .5], [.5, 1]]
SubFinslerMetric fixed_elliptic() {
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  return make_elliptic("A", 2, [A](const Point&) { return A; }, 1.5, {Point(Vec::Zero(3))}, true);
}

}  // namespace

TEST_CASE("elliptic construction and its dual") {
  const Point x(Vec::Zero(3));
  const auto eu = make_euclidean(2);
  CHECK(eu(x, vec({3, 4})) == 5.0);
  CHECK(dual_eval(eu, x, vec({3, 4})) == doctest::Approx(5.0).epsilon(1e-15));

  const auto four = make_elliptic("4I", 2, [](const Point&) -> Mat { return 4.0 * Mat::Identity(2, 2); }, 2.0, {x});
  CHECK(four(x, vec({0.6, 0.8})) == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_elliptic("4I", 2, [](const Point&) -> Mat { return 4.0 * Mat::Identity(2, 2); }, 1.5, {x}),
                  Error);
  CHECK_THROWS_AS(make_elliptic("x", 2, [](const Point&) -> Mat { return Mat::Identity(2, 2); }, 0.5, {x}), Error);

  // numpy: sqrt(v^T A v) and sqrt(v^T A^-1 v)
  const auto A = fixed_elliptic();
  CHECK(A(x, vec({1, 0})) == doctest::Approx(1.4142135623730951).epsilon(1e-14));
  CHECK(dual_eval(A, x, vec({1, 0})) == doctest::Approx(0.7559289460184544).epsilon(1e-14));
  CHECK(A(x, vec({0.3, -0.7})) == doctest::Approx(0.6782329983125267).epsilon(1e-14));
  CHECK(dual_eval(A, x, vec({0.3, -0.7})) == doctest::Approx(0.8552359741197579).epsilon(1e-14));
  CHECK(A.dual_strategy() == DualStrategy::EllipticExact);
}

TEST_CASE("polytope gauges and their duals") {
  const Point x(Vec::Zero(3));
  const auto l1 = make_lp_gauge(2, "l1");
  const auto linf = make_lp_gauge(2, "linf");
  CHECK(l1(x, vec({0.3, -0.4})) == doctest::Approx(0.7));
  CHECK(linf(x, vec({0.3, -0.4})) == doctest::Approx(0.4));
  CHECK(dual_eval(linf, x, vec({0.3, -0.4})) == doctest::Approx(0.7));
  CHECK(dual_eval(l1, x, vec({0.3, -0.4})) == doctest::Approx(0.4));
  CHECK(l1.dual_strategy() == DualStrategy::PolyhedralExact);

  // The gauge computed by linear programming agrees with the closed forms.
  std::mt19937_64 rng(5);
  const std::vector<Vec> cross{vec({1, 0, 0}), vec({-1, 0, 0}), vec({0, 1, 0}),
                               vec({0, -1, 0}), vec({0, 0, 1}), vec({0, 0, -1})};
  for (int k = 0; k < 50; ++k) {
    const Vec h = uniform_vec(rng, 3, -2.0, 2.0);
    CHECK(polytope_gauge(cross, h) == doctest::Approx(h.lpNorm<1>()).epsilon(1e-12));
  }
  const auto hex = hexagon();
  for (const Vec& v : hex.vertices(x)) CHECK(hex(x, v) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<Vec> lopsided{vec({1, 0}), vec({0, 1}), vec({-1, 0})};
  CHECK_THROWS_AS(make_polyhedral("bad", 2, [lopsided](const Point&) { return lopsided; }, 2.0, {x}), Error);
  const std::vector<Vec> flat{vec({1, 0}), vec({-1, 0})};
  CHECK_THROWS_AS(make_polyhedral("flat", 2, [flat](const Point&) { return flat; }, 2.0, {x}), Error);
}

TEST_CASE("scaling a metric rescales its dual") {
  const Point x(Vec::Zero(3));
  for (const auto& phi : {make_euclidean(2), make_lp_gauge(2, "l1"), fixed_elliptic()}) {
    const auto s = scaled(phi, 3.0);
    const Vec v = vec({0.2, -1.1});
    CHECK(s(x, v) == doctest::Approx(3.0 * phi(x, v)));
    CHECK(dual_eval(s, x, v) == doctest::Approx(dual_eval(phi, x, v) / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("bidual recovers convex metrics and exposes nonconvex ones") {
  const auto g = builtin_group("heisenberg1");
  const auto S = samples(*g, 2, 500, 17);
  for (const auto& phi : {make_euclidean(2), fixed_elliptic(), make_oscillating(*g), hexagon(),
                          make_lp_gauge(2, "l1"), make_lp_gauge(2, "linf")}) {
    CAPTURE(phi.name);
    const auto rep = bidual_check(phi, S);
    CHECK(rep.passed);
    CHECK(rep.max_relative_gap <= 1e-9);
  }

  const auto nc = make_nonconvex_min(2, 0.8);
  const auto rep = bidual_check(nc, S);
  CHECK(rep.strategy == DualStrategy::Sampled);
  // The convex hull of the unit ball is strictly larger somewhere, so the
  // bidual drops well below phi in some direction.
  CHECK(rep.min_signed_gap < -0.02);
  CHECK_FALSE(rep.passed);

  const auto round = make_generic("round", 2, [](const Point&, const Vec& h) { return h.norm(); }, 1.0,
                                  Regularity::Continuous, true, true);
  const auto rr = bidual_check(round, samples(*g, 2, 50, 3));
  CHECK(rr.strategy == DualStrategy::Sampled);
  CHECK(rr.passed);
  CHECK(rr.max_relative_gap <= rr.bound);
}

TEST_CASE("sampled dual is a monotone lower bound") {
  const Point x(Vec::Zero(3));
  const auto hexg = make_generic("hexg", 2, [h = hexagon()](const Point& p, const Vec& v) { return h(p, v); }, 2.0,
                                 Regularity::Continuous, true, true);
  const Vec v = vec({0.37, 0.91});
  const double exact = dual_eval(hexagon(), x, v);
  double prev = 0.0;
  for (int res : {4, 8, 16, 32, 64, 128, 256}) {
    const auto d = sampled_dual(hexg, x, v, res);
    CHECK(d.value >= prev);
    CHECK(d.value <= exact * (1.0 + 1e-12));
    CHECK(exact - d.value <= d.error_bound * exact);
    prev = d.value;
  }

  // Rank 3 uses the Fibonacci mesh.
  const auto eu3 = make_generic("eu3", 3, [](const Point&, const Vec& h) { return h.norm(); }, 1.0,
                                Regularity::Continuous, true, true);
  const Vec w = vec({0.2, -0.5, 0.4});
  const auto d3 = sampled_dual(eu3, Point(Vec::Zero(5)), w, 256);
  CHECK(d3.value <= w.norm() * (1.0 + 1e-12));
  CHECK(w.norm() - d3.value <= d3.error_bound * w.norm());
}

TEST_CASE("duals satisfy the sandwich, subadditivity and the pairing inequality") {
  const auto g = builtin_group("heisenberg1");
  std::mt19937_64 rng(23);
  for (const auto& phi : {make_euclidean(2), fixed_elliptic(), make_oscillating(*g), hexagon(),
                          make_lp_gauge(2, "linf"), make_laminate(2, 3.0, 0.4)}) {
    CAPTURE(phi.name);
    const auto star = dual_metric(phi);
    for (int k = 0; k < 200; ++k) {
      const Point x = random_point(rng, *g);
      const Vec v = uniform_vec(rng, 2, -1, 1), w = uniform_vec(rng, 2, -1, 1);
      const double sv = star(x, v);
      CHECK(sv >= v.norm() / phi.alpha * (1 - 1e-12));
      CHECK(sv <= v.norm() * phi.alpha * (1 + 1e-12));
      CHECK(star(x, Vec(v + w)) <= sv + star(x, w) + 1e-9);
      CHECK(std::abs(v.dot(w)) <= phi(x, w) * sv * (1 + 1e-12));
    }
  }
}

TEST_CASE("axiom verification") {
  const auto g = builtin_group("heisenberg1");
  std::mt19937_64 rng(2);
  std::vector<Point> pts;
  std::vector<Vec> vs;
  for (int k = 0; k < 20; ++k) pts.push_back(random_point(rng, *g, -3.0, 3.0));
  for (int k = 0; k < 20; ++k) vs.push_back(uniform_vec(rng, 2, -1, 1));

  CHECK(verify_metric_axioms(make_euclidean(2), pts, vs).ok());
  CHECK(verify_metric_axioms(make_oscillating(*g), pts, vs).ok());
  CHECK(verify_metric_axioms(hexagon(), pts, vs).ok());

  auto doubled = scaled(make_euclidean(2), 2.0);
  doubled.alpha = 1.0;
  const auto rep = verify_metric_axioms(doubled, pts, vs);
  CHECK(rep.homogeneity_ok);
  CHECK_FALSE(rep.sandwich_ok);
  CHECK(rep.sandwich == doctest::Approx(1.0));

  auto nc = make_nonconvex_min(2, 0.8);
  nc.convex = true;  // claim convexity falsely
  CHECK_FALSE(verify_metric_axioms(nc, pts, vs).triangle_ok);
}

TEST_CASE("semicontinuity probes follow the regularity tag") {
  const auto g = builtin_group("heisenberg1");
  const Vec v = vec({0.6, 0.8});
  const std::vector<double> radii{1e-2, 1e-4, 1e-8};

  const auto cont = make_oscillating(*g);
  CHECK(semicontinuity_probe(*g, cont, g->point({0.3, -0.2, 0.1}), v, radii, 64).ok());

  const Point on_interface = g->point({0.0, 0.4, -0.3});
  const auto lsc = make_two_phase(2, 0.0, 1.0, 2.0, Regularity::LowerSemicontinuous);
  const auto lr = semicontinuity_probe(*g, lsc, on_interface, v, radii, 64);
  CHECK(lr.value == doctest::Approx(1.0));
  CHECK(lr.lower_ok);
  CHECK(lr.sampled_sup == doctest::Approx(2.0).epsilon(1e-6));  // the jump is seen
  CHECK(dual_metric(lsc).regularity == Regularity::UpperSemicontinuous);

  const auto usc = make_two_phase(2, 0.0, 1.0, 2.0, Regularity::UpperSemicontinuous);
  const auto ur = semicontinuity_probe(*g, usc, on_interface, v, radii, 64);
  CHECK(ur.value == doctest::Approx(2.0));
  CHECK(ur.upper_ok);
  CHECK(dual_metric(usc).regularity == Regularity::LowerSemicontinuous);

  // The same jump tagged the wrong way round is caught.
  auto wrong = lsc;
  wrong.regularity = Regularity::UpperSemicontinuous;
  CHECK_FALSE(semicontinuity_probe(*g, wrong, on_interface, v, radii, 64).upper_ok);
}

TEST_CASE("built-in families") {
  const auto g = builtin_group("heisenberg1");
  const auto lam = make_laminate(2, 4.0, 0.5);
  CHECK(lam(g->point({1.0 / 16.0, 0, 0}), vec({1, 0})) == doctest::Approx(1.5));
  CHECK(lam(g->point({3.0 / 16.0, 0, 0}), vec({0, 2})) == doctest::Approx(1.0));
  CHECK(lam.lower_constant() == doctest::Approx(0.5));
  CHECK(make_euclidean(2).lower_constant() == 1.0);
  CHECK(make_lp_gauge(2, "l1").lower_constant() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(scaled(make_euclidean(2), 2.0).lower_constant() == 2.0);
  CHECK_THROWS_AS(make_lp_gauge(2, "l7"), Error);
  CHECK_THROWS_AS(make_laminate(2, 1.0, 1.0), Error);
  CHECK(make_nonconvex_min(2).convex == false);

  const auto dirs = sphere_directions(3, 100);
  CHECK(dirs.size() == 100);
  for (const Vec& d : dirs) CHECK(d.norm() == doctest::Approx(1.0));
  CHECK(regularity_from_string(to_string(Regularity::UpperSemicontinuous)) == Regularity::UpperSemicontinuous);
}
