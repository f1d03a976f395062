#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sublab/gamma.hpp"
#include "support.hpp"

using namespace sublab;
using sublab::test::vec;

namespace {

SolverConfig light() {
  SolverConfig c;
  c.multistarts = 2;
  c.segments = 32;
  return c;
}

AtomicMeasure horizontal_measure(const Group& g) {
  return AtomicMeasure({{g.point({0, 0, 0}), g.point({0.5, 0, 0}), 1.0},
                        {g.point({0, 0.2, 0}), g.point({0.25, 0.6, 0.05}), 0.5}},
                       vec({-1, -1, -1}), vec({1, 1, 1}));
}

}  // namespace

TEST_CASE("laminate cell against quadrature references") {
  // mpmath, amplitude 0.5 (tests/oracles/generate.py)
  const LaminateCell cell(0.5);
  CHECK(cell.a_min() == 0.5);
  CHECK(cell.a(0.25) == doctest::Approx(1.5));
  CHECK(cell.mean_root(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cell.mean_root(0.25) == doctest::Approx(0.96267444479655033).epsilon(1e-12));
  CHECK(cell.mean_root(0.5) == doctest::Approx(0.81830988618379067).epsilon(1e-12));
  CHECK(cell.homogenized(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cell.homogenized(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cell.homogenized(0.6, 0.8) == doctest::Approx(0.89115942873978234).epsilon(1e-10));
  CHECK(cell.homogenized(vec({0.5, -0.3})) == doctest::Approx(0.56886113223339647).epsilon(1e-10));

  // Periodic accumulation: one period adds F(lambda).
  CHECK(cell.cumulative_root(0.3, 1.0) == doctest::Approx(cell.mean_root(0.3)).epsilon(1e-12));
  CHECK(cell.cumulative_root(0.3, 2.75) - cell.cumulative_root(0.3, 1.75) ==
        doctest::Approx(cell.mean_root(0.3)).epsilon(1e-12));
  CHECK(cell.cumulative_root(0.3, -0.4) == doctest::Approx(-(cell.mean_root(0.3) - cell.cumulative_root(0.3, 0.6)))
                                              .epsilon(1e-12));

  // The homogenized norm is a norm between a_min |v| and |v|.
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const Vec v = sublab::test::uniform_vec(rng, 2, -1, 1), w = sublab::test::uniform_vec(rng, 2, -1, 1);
    const double hv = cell.homogenized(v);
    CHECK(hv <= v.norm() * (1 + 1e-12));
    CHECK(hv >= 0.5 * v.norm() * (1 - 1e-12));
    CHECK(cell.homogenized(Vec(v + w)) <= hv + cell.homogenized(w) + 1e-10);
  }
  const LaminateCell flat(0.0);
  CHECK(flat.homogenized(0.6, 0.8) == doctest::Approx(1.0));
}

TEST_CASE("atomic measures") {
  const auto g = builtin_group("heisenberg1");
  const auto mu = horizontal_measure(*g);
  CHECK(mu.total_mass() == 1.5);
  CHECK_THROWS_AS(AtomicMeasure({{g->identity(), g->point({2, 0, 0}), 1.0}}, vec({-1, -1, -1}), vec({1, 1, 1})),
                  Error);
  CHECK_THROWS_AS(AtomicMeasure({{g->identity(), g->point({0.5, 0, 0}), 0.0}}, vec({-1, -1, -1}), vec({1, 1, 1})),
                  Error);

  const Point u = g->point({0.4, 0, 0});
  const auto moved = drift_measure(*g, mu, u, 4, 2.0);
  CHECK(moved.atoms()[0].x == g->point({0.1, 0, 0}));
  CHECK(moved.atoms()[0].w == doctest::Approx(1.5));
  CHECK(moved.atoms()[1].w == doctest::Approx(0.75));
}

TEST_CASE("J is linear in weights and scales with the family") {
  const auto g = builtin_group("heisenberg1");
  const auto fam = DistanceFamily::scaling(g, make_euclidean(2), light(), 1.0);
  const Atom a{g->identity(), g->point({0.5, 0, 0}), 1.0};
  const AtomicMeasure one({a}, vec({-1, -1, -1}), vec({1, 1, 1}));
  const auto j = J_eval(fam, 0, one);
  CHECK(j.value.lower == doctest::Approx(0.5));
  CHECK(j.value.upper == doctest::Approx(0.5));

  const Atom b{g->identity(), g->point({0, 0.3, 0}), 2.0};
  const AtomicMeasure two({a, b}, vec({-1, -1, -1}), vec({1, 1, 1}));
  CHECK(J_eval(fam, 0, two).value.midpoint() == doctest::Approx(0.5 + 2.0 * 0.3));

  const auto mu = horizontal_measure(*g);
  const double j0 = J_eval(fam, 0, mu).value.midpoint();
  for (int n : {1, 4}) CHECK(J_eval(fam, n, mu).value.midpoint() == doctest::Approx((1.0 + 1.0 / n) * j0).epsilon(1e-12));

  const auto constant = DistanceFamily::constant(g, make_euclidean(2), light());
  CHECK(J_eval(constant, 7, mu).value.midpoint() == J_eval(constant, 0, mu).value.midpoint());
  CHECK(&constant.oracle(3) == &constant.oracle(9));
}

TEST_CASE("L functional") {
  const auto g = builtin_group("heisenberg1");
  const HorizontalCurve c(g, g->identity(), Control({vec({0.3, 0.4}), vec({-0.1, 0.2})}));
  const auto eu = make_euclidean(2);
  CHECK(L_eval(eu, c) == doctest::Approx(c.cc_length()));
  CHECK(L_eval(scaled(eu, 1.25), c) == doctest::Approx(1.25 * c.cc_length()));
  const auto osc = make_oscillating(*g);
  CHECK(L_eval(osc, reparametrize_constant_speed(c)) == doctest::Approx(L_eval(osc, c)).epsilon(1e-8));
  CHECK_THROWS_AS(L_eval(make_two_phase(2, 0.0, 1.0, 2.0, Regularity::LowerSemicontinuous), c), Error);
  CHECK_THROWS_AS(L_eval(make_nonconvex_min(2), c), Error);
}

TEST_CASE("uniform gaps") {
  const auto g = builtin_group("heisenberg1");
  const auto grid = box_lattice(vec({-0.5, -0.5, 0}), vec({0.5, 0.5, 0}), 2);
  CHECK(grid.size() == 8);
  const auto fam = DistanceFamily::scaling(g, make_euclidean(2), light(), 1.0);
  const auto u = uniform_distance_gap(fam, 4, grid);
  double dmax = 0.0;
  for (const Point& x : grid) {
    for (const Point& y : grid) dmax = std::max(dmax, fam.distance(0, x, y).midpoint());
  }
  CHECK(u.gap == doctest::Approx(dmax / 4.0).epsilon(1e-9));
  const auto constant = DistanceFamily::constant(g, make_euclidean(2), light());
  CHECK(uniform_distance_gap(constant, 4, grid).gap == 0.0);
}

TEST_CASE("laminate distances") {
  const auto g = builtin_group("heisenberg1");
  const auto fam = DistanceFamily::laminate(g, 0.5, light());
  CHECK(fam.alpha() == 2.0);
  CHECK(fam.config(8).segments == 128);
  // Limit distances along the layers' normal and parallel to them are exact.
  const auto along = fam.distance(0, g->identity(), g->point({1, 0, 0}));
  CHECK(along.lower == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(along.upper == doctest::Approx(1.0).epsilon(1e-9));
  const auto across = fam.distance(0, g->identity(), g->point({0, 1, 0}));
  CHECK(across.midpoint() == doctest::Approx(0.5).epsilon(1e-9));
  // A member is never below the limit's lower bound on normal displacements
  // spanning whole periods.
  const auto d4 = fam.distance(4, g->identity(), g->point({1, 0, 0}));
  CHECK(d4.lower <= d4.upper);
  CHECK(d4.upper >= 1.0 - 1e-9);
  CHECK(fam.metric(0).form == MetricForm::Support);
  CHECK_FALSE(fam.competitors(4).empty());
}

TEST_CASE("continuous convergence for the scaling family") {
  const auto g = builtin_group("heisenberg1");
  const auto fam = DistanceFamily::scaling(g, make_euclidean(2), light(), 1.0);
  const auto mu = horizontal_measure(*g);
  const auto rep = continuous_convergence_check(fam, [&](int) { return mu; }, mu, {4, 8, 16});
  const double J = rep.j_limit.midpoint();
  for (const auto& row : rep.rows) CHECK(row.error == doctest::Approx(J / row.n).epsilon(1e-9));
  CHECK(rep.strictly_decreasing());
  CHECK(rep.decreasing_within_tolerance());
  CHECK(rep.rate == doctest::Approx(1.0).epsilon(1e-6));

  // Drifting atoms under a fixed distance: error bounded by the Holder envelope.
  const auto constant = DistanceFamily::constant(g, make_euclidean(2), light());
  const Point u = g->point({0.3, -0.2, 0.1});
  const auto drift = continuous_convergence_check(
      constant, [&](int n) { return drift_measure(*g, mu, u, n); }, mu, {4, 8, 16});
  CHECK(drift.decreasing_within_tolerance());
  CHECK(drift.rows.back().error < drift.rows.front().error + 1e-9);
}

TEST_CASE("recovery sequences") {
  const auto g = builtin_group("heisenberg1");
  const HorizontalCurve gamma(g, g->identity(), Control({vec({0.5, 0.2}), vec({0.1, -0.4}), vec({-0.3, 0.3})}));
  const auto fam = DistanceFamily::constant(g, make_euclidean(2), light());
  const auto rows = recovery_sequence(fam, gamma, {1, 2}, {2, 4});
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.flagged.empty());
    CHECK(r.construction_slack == std::ldexp(1.0, -r.r));
    CHECK(r.length_n <= r.length_limit + r.r * r.construction_slack + 1e-9);
    CHECK(r.endpoint_gap <= 1e-6);
  }
  CHECK(rows[1].sup_distance <= rows[0].sup_distance + 1e-9);
  CHECK_THROWS_AS(recovery_sequence(fam, gamma, {1, 2}, {2}), Error);
}

TEST_CASE("equicontinuity") {
  const auto g = builtin_group("heisenberg1");
  const auto grid = box_lattice(vec({-0.5, -0.5, 0}), vec({0.5, 0.5, 0}), 2);
  const auto constant = DistanceFamily::constant(g, make_euclidean(2), light());
  const auto c = equicontinuity_fit(constant, {1, 2}, grid);
  CHECK(c.spread() == doctest::Approx(1.0));
  const auto fam = DistanceFamily::scaling(g, make_euclidean(2), light(), 1.0);
  const auto s = equicontinuity_fit(fam, {1, 2, 4}, grid);
  for (std::size_t i = 0; i < s.ns.size(); ++i) {
    CHECK(s.constants[i] == doctest::Approx((1.0 + 1.0 / s.ns[i]) * c.constants[0]).epsilon(1e-9));
  }
  CHECK(s.constant <= 2.0 * c.constant + 1e-9);
}

TEST_CASE("box lattice") {
  const auto pts = box_lattice(vec({0, 0}), vec({1, 2}), 3);
  CHECK(pts.size() == 9);
  CHECK(pts.front() == Point(vec({0, 0})));
  CHECK(pts.back() == Point(vec({1, 2})));
  CHECK(to_string(FamilyKind::Laminate) == "laminate");
}
