#include "sublab/curves.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <ostream>
#include <sstream>

#include "sublab/format.hpp"

namespace sublab {

Control::Control(std::vector<Vec> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::InvalidSpec, "control needs at least one piece");
  const auto n = values_.size();
  breaks_.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) breaks_[j] = static_cast<double>(j) / static_cast<double>(n);
  for (const Vec& v : values_) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidSpec, "control has non-finite entries");
    if (v.size() != values_.front().size()) throw Error(ErrorCode::DimensionMismatch, "control pieces differ in length");
  }
}

Control::Control(std::vector<double> breaks, std::vector<Vec> values)
    : breaks_(std::move(breaks)), values_(std::move(values)), uniform_(false) {
  if (values_.empty() || breaks_.size() != values_.size() + 1) {
    throw Error(ErrorCode::InvalidSpec, "control needs N >= 1 pieces and N + 1 breakpoints");
  }
  if (breaks_.front() != 0.0 || breaks_.back() != 1.0) throw Error(ErrorCode::InvalidSpec, "breakpoints must span [0, 1]");
  for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
    if (!(breaks_[j] < breaks_[j + 1])) throw Error(ErrorCode::InvalidSpec, "breakpoints must increase");
  }
  for (const Vec& v : values_) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidSpec, "control has non-finite entries");
    if (v.size() != values_.front().size()) throw Error(ErrorCode::DimensionMismatch, "control pieces differ in length");
  }
}

int Control::piece(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << "t = " << t << " outside [0, 1]";
    throw Error(ErrorCode::TOutOfRange, os.str());
  }
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  const int j = static_cast<int>(it - breaks_.begin()) - 1;
  return std::clamp(j, 0, segments() - 1);
}

Control Control::refined() const {
  std::vector<Vec> values;
  values.reserve(values_.size() * 2);
  for (const Vec& v : values_) {
    values.push_back(v);
    values.push_back(v);
  }
  if (uniform_) return Control(std::move(values));
  std::vector<double> breaks;
  for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
    breaks.push_back(breaks_[j]);
    breaks.push_back(0.5 * (breaks_[j] + breaks_[j + 1]));
  }
  breaks.push_back(1.0);
  return Control(std::move(breaks), std::move(values));
}

HorizontalCurve::HorizontalCurve(GroupPtr g, Point start, Control control)
    : group_(std::move(g)), control_(std::move(control)) {
  if (start.dim() != group_->dim()) throw Error(ErrorCode::DimensionMismatch, "start point has wrong dimension");
  if (control_.rank() != group_->rank()) throw Error(ErrorCode::DimensionMismatch, "control rank differs from group rank");
  nodes_.reserve(static_cast<std::size_t>(control_.segments()) + 1);
  nodes_.push_back(std::move(start));
  for (int j = 0; j < control_.segments(); ++j) {
    const Point step = group_->exp_horizontal(control_.width(j) * control_.value(j));
    nodes_.push_back(group_->mul(nodes_.back(), step));
  }
}

Point HorizontalCurve::evaluate(double t) const {
  const int j = control_.piece(t);
  const double s = t - control_.breaks()[static_cast<std::size_t>(j)];
  if (s == 0.0) return nodes_[static_cast<std::size_t>(j)];
  return group_->mul(nodes_[static_cast<std::size_t>(j)], group_->exp_horizontal(s * control_.value(j)));
}

double HorizontalCurve::length(const SubFinslerMetric& phi) const {
  double total = 0.0;
  for (int j = 0; j < control_.segments(); ++j) {
    const double w = control_.width(j);
    const Vec& h = control_.value(j);
    if (phi.base_independent) {
      total += w * phi(nodes_[static_cast<std::size_t>(j)], h);
    } else {
      const Point mid = group_->mul(nodes_[static_cast<std::size_t>(j)], group_->exp_horizontal(0.5 * w * h));
      total += w * phi(mid, h);
    }
  }
  return total;
}

double HorizontalCurve::accurate_length(const SubFinslerMetric& phi, double tol) const {
  if (phi.base_independent) return length(phi);
  const Group& g = *group_;
  double total = 0.0;
  for (int j = 0; j < control_.segments(); ++j) {
    const Vec& h = control_.value(j);
    const double w = control_.width(j);
    if (w == 0.0 || h.isZero(0.0)) continue;
    const Point& base = nodes_[static_cast<std::size_t>(j)];
    auto f = [&](double s) { return phi(g.mul(base, g.exp_horizontal(s * h)), h); };
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, w, 12, tol);
  }
  return total;
}

double HorizontalCurve::cc_length() const {
  double total = 0.0;
  for (int j = 0; j < control_.segments(); ++j) total += control_.width(j) * control_.value(j).norm();
  return total;
}

double HorizontalCurve::cc_speed(double t) const { return control_.value(control_.piece(t)).norm(); }

HorizontalCurve reparametrize_constant_speed(const HorizontalCurve& c) {
  const Control& ctl = c.control();
  const double total = c.cc_length();
  if (total == 0.0) return c;
  std::vector<double> breaks{0.0};
  std::vector<Vec> values;
  double acc = 0.0;
  for (int j = 0; j < ctl.segments(); ++j) {
    const double speed = ctl.value(j).norm();
    if (speed == 0.0) continue;  // stationary pieces carry no length
    acc += ctl.width(j) * speed;
    breaks.push_back(acc / total);
    values.push_back(ctl.value(j) * (total / speed));
  }
  breaks.back() = 1.0;
  return HorizontalCurve(c.group(), c.start(), Control(std::move(breaks), std::move(values)));
}

HorizontalCurve reverse(const HorizontalCurve& c) {
  const Control& ctl = c.control();
  std::vector<Vec> values(ctl.values().rbegin(), ctl.values().rend());
  for (Vec& v : values) v = -v;
  if (ctl.uniform()) return HorizontalCurve(c.group(), c.endpoint(), Control(std::move(values)));
  std::vector<double> breaks;
  for (auto it = ctl.breaks().rbegin(); it != ctl.breaks().rend(); ++it) breaks.push_back(1.0 - *it);
  breaks.front() = 0.0;
  breaks.back() = 1.0;
  return HorizontalCurve(c.group(), c.endpoint(), Control(std::move(breaks), std::move(values)));
}

HorizontalCurve concatenate(const HorizontalCurve& c1, const HorizontalCurve& c2) {
  const double mismatch = (c1.endpoint().coords - c2.start().coords).cwiseAbs().maxCoeff();
  if (mismatch > 1e-10) {
    std::ostringstream os;
    os << "endpoint of the first curve misses the start of the second by " << mismatch;
    throw Error(ErrorCode::EndpointMismatch, os.str());
  }
  const Control& a = c1.control();
  const Control& b = c2.control();
  std::vector<Vec> values;
  for (const Vec& v : a.values()) values.push_back(2.0 * v);
  for (const Vec& v : b.values()) values.push_back(2.0 * v);
  if (a.uniform() && b.uniform() && a.segments() == b.segments()) {
    return HorizontalCurve(c1.group(), c1.start(), Control(std::move(values)));
  }
  std::vector<double> breaks;
  for (double t : a.breaks()) breaks.push_back(0.5 * t);
  for (std::size_t k = 1; k < b.breaks().size(); ++k) breaks.push_back(0.5 + 0.5 * b.breaks()[k]);
  return HorizontalCurve(c1.group(), c1.start(), Control(std::move(breaks), std::move(values)));
}

void write_curve_csv(std::ostream& os, const HorizontalCurve& c) {
  const int n = c.group()->dim();
  const int m = c.group()->rank();
  os << "t";
  for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  for (int i = 0; i < m; ++i) os << ",h" << i + 1;
  os << '\n';
  const Control& ctl = c.control();
  for (int j = 0; j <= ctl.segments(); ++j) {
    const Vec& h = ctl.value(std::min(j, ctl.segments() - 1));
    os << format_double(ctl.breaks()[static_cast<std::size_t>(j)]);
    for (int i = 0; i < n; ++i) os << ',' << format_double(c.nodes()[static_cast<std::size_t>(j)].coords(i));
    for (int i = 0; i < m; ++i) os << ',' << format_double(h(i));
    os << '\n';
  }
}

}  // namespace sublab
