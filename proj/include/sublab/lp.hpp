#pragma once

#include <Eigen/Dense>

#include <optional>

namespace sublab::lp {

/// min c^T x  subject to  A x = b, x >= 0.
/// Dense two-phase simplex with Bland's rule; sized for the small programs
/// that arise from polytope gauges (a handful of rows, tens of columns).
/// Returns std::nullopt when the program is infeasible or unbounded.
std::optional<double> minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace sublab::lp
