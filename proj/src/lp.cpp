#include "sublab/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sublab::lp {

namespace {

constexpr double kPivotTol = 1e-12;

// Tableau rows 0..rows-1 are constraints, the last row is the objective
// (reduced costs, with -z in the last column).
struct Tableau {
  Eigen::MatrixXd T;
  std::vector<int> basis;

  [[nodiscard]] Eigen::Index rows() const { return T.rows() - 1; }
  [[nodiscard]] Eigen::Index cols() const { return T.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    T.row(r) /= T(r, c);
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      if (i != r && T(i, c) != 0.0) T.row(i) -= T(i, c) * T.row(r);
    }
    basis[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }

  // Returns false when unbounded.
  bool run(Eigen::Index allowed_cols) {
    for (int iter = 0; iter < 10000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < allowed_cols; ++c) {
        if (T(rows(), c) < -kPivotTol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        if (T(r, enter) > kPivotTol) {
          const double ratio = T(r, cols()) / T(r, enter);
          if (ratio < best - kPivotTol ||
              (std::abs(ratio - best) <= kPivotTol && leave >= 0 &&
               basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    return true;
  }
};

}  // namespace

std::optional<double> minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Tableau tab;
  tab.T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sign = b(r) < 0.0 ? -1.0 : 1.0;
    tab.T.row(r).head(n) = sign * A.row(r);
    tab.T(r, n + r) = 1.0;
    tab.T(r, n + m) = sign * b(r);
    tab.basis[static_cast<std::size_t>(r)] = static_cast<int>(n + r);
  }
  // Phase 1: minimize the sum of artificials.
  for (Eigen::Index r = 0; r < m; ++r) tab.T.row(m) -= tab.T.row(r);
  for (Eigen::Index r = 0; r < m; ++r) tab.T(m, n + r) = 0.0;
  if (!tab.run(n + m)) return std::nullopt;
  if (-tab.T(m, n + m) > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) return std::nullopt;

  // Drive remaining artificials out of the basis where possible.
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis[static_cast<std::size_t>(r)] >= n) {
      for (Eigen::Index col = 0; col < n; ++col) {
        if (std::abs(tab.T(r, col)) > kPivotTol) {
          tab.pivot(r, col);
          break;
        }
      }
    }
  }

  // Phase 2 objective in terms of the current basis.
  tab.T.row(m).setZero();
  tab.T.row(m).head(n) = c.transpose();
  for (Eigen::Index r = 0; r < m; ++r) {
    const int bc = tab.basis[static_cast<std::size_t>(r)];
    if (bc < n && c(bc) != 0.0) tab.T.row(m) -= c(bc) * tab.T.row(r);
  }
  // Artificial columns may not re-enter.
  if (!tab.run(n)) return std::nullopt;
  return -tab.T(m, n + m);
}

}  // namespace sublab::lp
