#pragma once

#include <random>
#include <vector>

#include "sublab/carnot.hpp"

namespace sublab::test {

inline Vec uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Point random_point(std::mt19937_64& rng, const Group& g, double lo = -2.0, double hi = 2.0) {
  return Point(uniform_vec(rng, g.dim(), lo, hi));
}

inline double max_abs_diff(const Point& a, const Point& b) { return (a.coords - b.coords).cwiseAbs().maxCoeff(); }

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace sublab::test
