#pragma once

// Horizontal curves driven by piecewise-constant controls. On each piece the
// curve follows a constant left-invariant horizontal field, whose flow is
// right translation by exp, so node points are exact group products.

#include <iosfwd>
#include <vector>

#include "sublab/carnot.hpp"
#include "sublab/metrics.hpp"

namespace sublab {

/// Piecewise-constant control h(t) on a partition 0 = t_0 < ... < t_N = 1.
class Control {
 public:
  Control() = default;
  /// Uniform grid with N = values.size() pieces.
  explicit Control(std::vector<Vec> values);
  Control(std::vector<double> breaks, std::vector<Vec> values);

  [[nodiscard]] int segments() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] int rank() const { return values_.empty() ? 0 : static_cast<int>(values_.front().size()); }
  [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }
  [[nodiscard]] const std::vector<Vec>& values() const { return values_; }
  [[nodiscard]] const Vec& value(int j) const { return values_[static_cast<std::size_t>(j)]; }
  [[nodiscard]] double width(int j) const {
    return breaks_[static_cast<std::size_t>(j) + 1] - breaks_[static_cast<std::size_t>(j)];
  }
  [[nodiscard]] bool uniform() const { return uniform_; }
  /// Index of the piece containing t; t = 1 belongs to the last piece.
  [[nodiscard]] int piece(double t) const;
  /// Each piece split in two; the curve is unchanged.
  [[nodiscard]] Control refined() const;

 private:
  std::vector<double> breaks_;
  std::vector<Vec> values_;
  bool uniform_ = true;
};

class HorizontalCurve {
 public:
  HorizontalCurve() = default;
  HorizontalCurve(GroupPtr g, Point start, Control control);

  [[nodiscard]] const GroupPtr& group() const { return group_; }
  [[nodiscard]] const Point& start() const { return nodes_.front(); }
  [[nodiscard]] const Point& endpoint() const { return nodes_.back(); }
  [[nodiscard]] const Control& control() const { return control_; }
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }

  [[nodiscard]] Point evaluate(double t) const;
  /// Sum over pieces of width * phi(gamma(midpoint), h_j).
  [[nodiscard]] double length(const SubFinslerMetric& phi) const;
  /// Adaptive Gauss-Kronrod along each piece's exact flow; equals length()
  /// for base-independent metrics.
  [[nodiscard]] double accurate_length(const SubFinslerMetric& phi, double tol = 1e-10) const;
  /// Length for the fiber norm; exact.
  [[nodiscard]] double cc_length() const;
  /// |h(t)|, the metric derivative with respect to d_cc.
  [[nodiscard]] double cc_speed(double t) const;

 private:
  GroupPtr group_;
  Control control_;
  std::vector<Point> nodes_;
};

HorizontalCurve reparametrize_constant_speed(const HorizontalCurve& c);
HorizontalCurve reverse(const HorizontalCurve& c);
/// c1 on [0, 1/2] and c2 on [1/2, 1]; c2 must start where c1 ends (1e-10).
HorizontalCurve concatenate(const HorizontalCurve& c1, const HorizontalCurve& c2);

/// Rows (t, coords..., h...) at every node; the last row repeats the final control.
void write_curve_csv(std::ostream& os, const HorizontalCurve& c);

}  // namespace sublab
