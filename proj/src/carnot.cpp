#include "sublab/carnot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sublab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::BracketGradingViolation: return "BracketGradingViolation";
    case ErrorCode::AntisymmetryViolation: return "AntisymmetryViolation";
    case ErrorCode::JacobiViolation: return "JacobiViolation";
    case ErrorCode::FirstLayerNotGenerating: return "FirstLayerNotGenerating";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeLambdaOutsideFirstLayer: return "NegativeLambdaOutsideFirstLayer";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::AlphaBoundViolation: return "AlphaBoundViolation";
    case ErrorCode::AsymmetricVertexSet: return "AsymmetricVertexSet";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::EndpointMismatch: return "EndpointMismatch";
    case ErrorCode::NotConvexMetric: return "NotConvexMetric";
    case ErrorCode::NotContinuousMetric: return "NotContinuousMetric";
    case ErrorCode::NoFeasibleCurve: return "NoFeasibleCurve";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::IncompatibleValues: return "IncompatibleValues";
    case ErrorCode::GradientUnavailable: return "GradientUnavailable";
    case ErrorCode::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string pair_name(int i, int j) {
  std::ostringstream os;
  os << "[e" << i + 1 << ", e" << j + 1 << "]";
  return os.str();
}

void check_dim(const Vec& v, int n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << " has length " << v.size() << ", expected " << n;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

}  // namespace

Group::Group(GroupSpec spec) : spec_(std::move(spec)) {
  for (std::size_t layer = 0; layer < spec_.layer_dims.size(); ++layer) {
    for (int c = 0; c < spec_.layer_dims[layer]; ++c) weights_.push_back(static_cast<int>(layer) + 1);
  }
  n_ = static_cast<int>(weights_.size());
  m_ = spec_.layer_dims.empty() ? 0 : spec_.layer_dims.front();

  // Normalize the bracket list into i < j terms; conflicting duplicates are
  // rejected by validate_spec before we get here.
  std::map<std::tuple<int, int, int>, double> table;
  for (const auto& b : spec_.brackets) {
    const double sign = b.i < b.j ? 1.0 : -1.0;
    const int lo = std::min(b.i, b.j);
    const int hi = std::max(b.i, b.j);
    for (const auto& [k, c] : b.out) table[{lo, hi, k}] = sign * c;
  }
  for (const auto& [key, c] : table) {
    if (c != 0.0) terms_.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), c});
  }
}

Point Group::point(std::initializer_list<double> coords) const {
  Vec v(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index idx = 0;
  for (double c : coords) v(idx++) = c;
  check_dim(v, n_, "point");
  return Point(std::move(v));
}

Point Group::exp_horizontal(const Vec& h) const {
  check_dim(h, m_, "horizontal coefficients");
  Vec v = Vec::Zero(n_);
  v.head(m_) = h;
  return Point(std::move(v));
}

AlgebraVector Group::bracket(const AlgebraVector& u, const AlgebraVector& v) const {
  AlgebraVector out = AlgebraVector::Zero(n_);
  for (const Term& t : terms_) out(t.k) += t.c * (u(t.i) * v(t.j) - u(t.j) * v(t.i));
  return out;
}

AlgebraVector Group::bch(const AlgebraVector& u, const AlgebraVector& v) const {
  AlgebraVector out = u + v;
  if (step() == 1) return out;
  const AlgebraVector uv = bracket(u, v);
  out += 0.5 * uv;
  if (step() == 2) return out;
  out += (1.0 / 12.0) * (bracket(u, uv) - bracket(v, uv));
  return out;
}

Point Group::mul(const Point& x, const Point& y) const {
  check_dim(x.coords, n_, "left factor");
  check_dim(y.coords, n_, "right factor");
  return Point(bch(x.coords, y.coords));
}

Point Group::inverse(const Point& x) const { return Point(-x.coords); }

Point Group::relative(const Point& x, const Point& y) const {
  return Point(bch(-x.coords, y.coords));
}

Point Group::dilate(double lambda, const Point& x) const {
  check_dim(x.coords, n_, "point");
  if (lambda < 0.0) {
    for (int i = m_; i < n_; ++i) {
      if (x.coords(i) != 0.0) {
        std::ostringstream os;
        os << "lambda = " << lambda << " with nonzero coordinate " << i + 1 << " in layer "
           << weights_[static_cast<std::size_t>(i)];
        throw Error(ErrorCode::NegativeLambdaOutsideFirstLayer, os.str());
      }
    }
  }
  Vec out = x.coords;
  for (int i = 0; i < n_; ++i) out(i) *= std::pow(lambda, weights_[static_cast<std::size_t>(i)]);
  return Point(std::move(out));
}

// d/du (u*v) . d = d + 1/2 [d,v] + 1/12 ([d,[u,v]] + [u,[d,v]] + [v,[v,d]])
Mat Group::d_bch_left(const AlgebraVector& u, const AlgebraVector& v) const {
  Mat J = Mat::Identity(n_, n_);
  if (step() == 1) return J;
  const AlgebraVector uv = step() == 3 ? bracket(u, v) : AlgebraVector::Zero(n_);
  for (int c = 0; c < n_; ++c) {
    AlgebraVector d = AlgebraVector::Zero(n_);
    d(c) = 1.0;
    const AlgebraVector dv = bracket(d, v);
    AlgebraVector col = d + 0.5 * dv;
    if (step() == 3) col += (1.0 / 12.0) * (bracket(d, uv) + bracket(u, dv) + bracket(v, bracket(v, d)));
    J.col(c) = col;
  }
  return J;
}

// d/dv (u*v) . d = d + 1/2 [u,d] + 1/12 ([u,[u,d]] + [d,[v,u]] + [v,[d,u]])
Mat Group::d_bch_right(const AlgebraVector& u, const AlgebraVector& v) const {
  Mat J = Mat::Identity(n_, n_);
  if (step() == 1) return J;
  const AlgebraVector vu = step() == 3 ? bracket(v, u) : AlgebraVector::Zero(n_);
  for (int c = 0; c < n_; ++c) {
    AlgebraVector d = AlgebraVector::Zero(n_);
    d(c) = 1.0;
    const AlgebraVector ud = bracket(u, d);
    AlgebraVector col = d + 0.5 * ud;
    if (step() == 3) col += (1.0 / 12.0) * (bracket(u, ud) + bracket(d, vu) + bracket(v, bracket(d, u)));
    J.col(c) = col;
  }
  return J;
}

Mat Group::horizontal_frame(const Point& x) const {
  check_dim(x.coords, n_, "point");
  // The eps-quadratic BCH term vanishes at eps = 0, leaving
  // X_j(x) = e_j + 1/2 [x, e_j] + 1/12 [x, [x, e_j]].
  Mat F(n_, m_);
  for (int j = 0; j < m_; ++j) {
    AlgebraVector e = AlgebraVector::Zero(n_);
    e(j) = 1.0;
    const AlgebraVector xe = bracket(x.coords, e);
    AlgebraVector col = e + 0.5 * xe;
    if (step() == 3) col += (1.0 / 12.0) * bracket(x.coords, xe);
    F.col(j) = col;
  }
  return F;
}

HorizontalVector Group::embed_horizontal(const Point& x, const Vec& layer1) const {
  check_dim(x.coords, n_, "point");
  check_dim(layer1, m_, "first-layer vector");
  return {x, layer1};
}

HorizontalVector Group::project_pi(const Point& x, const Point& y) const {
  check_dim(x.coords, n_, "point");
  check_dim(y.coords, n_, "point");
  return {x, y.coords.head(m_)};
}

double Group::fiber_inner(const HorizontalVector& u, const HorizontalVector& w) const {
  if (!(u.base == w.base)) throw Error(ErrorCode::BaseMismatch, "fiber vectors attached to different points");
  check_dim(u.h, m_, "fiber vector");
  check_dim(w.h, m_, "fiber vector");
  return u.h.dot(w.h);
}

double Group::fiber_norm(const HorizontalVector& u) const { return std::sqrt(fiber_inner(u, u)); }

double Group::gauge(const Vec& z) const {
  double g = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double a = std::abs(z(i));
    switch (weights_[static_cast<std::size_t>(i)]) {
      case 1: g += a; break;
      case 2: g += std::sqrt(a); break;
      default: g += std::cbrt(a); break;
    }
  }
  return g;
}

GroupPtr validate_spec(const GroupSpec& spec) {
  if (spec.layer_dims.empty()) throw Error(ErrorCode::InvalidSpec, "layer_dims is empty");
  for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) {
    if (spec.layer_dims[l] < 1) {
      throw Error(ErrorCode::InvalidSpec, "layer " + std::to_string(l + 1) + " has nonpositive dimension");
    }
  }
  const int k = static_cast<int>(spec.layer_dims.size());
  if (k > 3) throw Error(ErrorCode::StepTooLarge, "step " + std::to_string(k) + " exceeds 3");
  int n = 0;
  std::vector<int> weight;
  for (int l = 0; l < k; ++l) {
    n += spec.layer_dims[static_cast<std::size_t>(l)];
    for (int c = 0; c < spec.layer_dims[static_cast<std::size_t>(l)]; ++c) weight.push_back(l + 1);
  }
  if (n > kMaxDim) {
    throw Error(ErrorCode::InvalidSpec, "dimension " + std::to_string(n) + " exceeds " + std::to_string(kMaxDim));
  }

  // Antisymmetry and grading, entry by entry.
  std::map<std::pair<int, int>, Vec> given;
  for (const auto& b : spec.brackets) {
    if (b.i < 0 || b.i >= n || b.j < 0 || b.j >= n) {
      throw Error(ErrorCode::InvalidSpec, "bracket " + pair_name(b.i, b.j) + " has an out-of-range index");
    }
    Vec out = Vec::Zero(n);
    for (const auto& [idx, c] : b.out) {
      if (idx < 0 || idx >= n) {
        throw Error(ErrorCode::InvalidSpec, "bracket " + pair_name(b.i, b.j) + " outputs to index out of range");
      }
      out(idx) += c;
    }
    if (b.i == b.j && out.cwiseAbs().maxCoeff() > kValidationTol) {
      throw Error(ErrorCode::AntisymmetryViolation, pair_name(b.i, b.j) + " must vanish");
    }
    const int target = weight[static_cast<std::size_t>(b.i)] + weight[static_cast<std::size_t>(b.j)];
    for (int idx = 0; idx < n; ++idx) {
      if (std::abs(out(idx)) > kValidationTol && weight[static_cast<std::size_t>(idx)] != target) {
        std::ostringstream os;
        os << pair_name(b.i, b.j) << " has a component on e" << idx + 1 << " (layer "
           << weight[static_cast<std::size_t>(idx)] << "), expected layer " << target;
        throw Error(ErrorCode::BracketGradingViolation, os.str());
      }
    }
    if (auto it = given.find({b.i, b.j}); it != given.end() && (it->second - out).cwiseAbs().maxCoeff() > kValidationTol) {
      throw Error(ErrorCode::InvalidSpec, pair_name(b.i, b.j) + " given twice with different values");
    }
    if (auto it = given.find({b.j, b.i}); it != given.end() && (it->second + out).cwiseAbs().maxCoeff() > kValidationTol) {
      throw Error(ErrorCode::AntisymmetryViolation, pair_name(b.i, b.j) + " != -" + pair_name(b.j, b.i));
    }
    given[{b.i, b.j}] = out;
  }

  auto group = std::shared_ptr<Group>(new Group(spec));
  const Group& g = *group;

  auto basis = [n](int i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    return e;
  };

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const Vec ea = basis(a), eb = basis(b), ec = basis(c);
        const Vec jac = g.bracket(ea, g.bracket(eb, ec)) + g.bracket(eb, g.bracket(ec, ea)) +
                        g.bracket(ec, g.bracket(ea, eb));
        if (jac.cwiseAbs().maxCoeff() > kValidationTol) {
          std::ostringstream os;
          os << "Jacobi identity fails on (e" << a + 1 << ", e" << b + 1 << ", e" << c + 1 << ")";
          throw Error(ErrorCode::JacobiViolation, os.str());
        }
      }
    }
  }

  // [g_1, g_{i-1}] must span g_i.
  const int m = spec.layer_dims.front();
  std::vector<Vec> prev;
  for (int i = 0; i < m; ++i) prev.push_back(basis(i));
  int offset = m;
  for (int layer = 2; layer <= k; ++layer) {
    const int dim = spec.layer_dims[static_cast<std::size_t>(layer - 1)];
    std::vector<Vec> next;
    for (int a = 0; a < m; ++a) {
      for (const Vec& w : prev) next.push_back(g.bracket(basis(a), w));
    }
    Eigen::MatrixXd block(dim, static_cast<Eigen::Index>(next.size()));
    for (std::size_t c = 0; c < next.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = next[c].segment(offset, dim);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
    lu.setThreshold(kValidationTol);
    if (block.cols() == 0 || lu.rank() < dim) {
      throw Error(ErrorCode::FirstLayerNotGenerating,
                  "iterated brackets of the first layer do not span layer " + std::to_string(layer));
    }
    prev = std::move(next);
    offset += dim;
  }
  return group;
}

GroupSpec builtin_group_spec(const std::string& name) {
  if (name == "abelian2") return {"abelian2", {2}, {}};
  if (name == "heisenberg1") return {"heisenberg1", {2, 1}, {{0, 1, {{2, 1.0}}}}};
  if (name == "heisenberg2") return {"heisenberg2", {4, 1}, {{0, 1, {{4, 1.0}}}, {2, 3, {{4, 1.0}}}}};
  if (name == "engel") return {"engel", {2, 1, 1}, {{0, 1, {{2, 1.0}}}, {0, 2, {{3, 1.0}}}}};
  throw Error(ErrorCode::UnknownBuiltin, "no built-in group named '" + name + "'");
}

GroupPtr builtin_group(const std::string& name) { return validate_spec(builtin_group_spec(name)); }

std::vector<std::string> builtin_group_names() { return {"abelian2", "heisenberg1", "heisenberg2", "engel"}; }

}  // namespace sublab
