#pragma once

// Carnot groups of step <= 3 in exponential coordinates of the first kind.
//
// A point p = exp(sum_i p_i e_i) is identified with its coordinate vector, so
// exp and log are the identity on coordinates and the group law is the
// truncated Baker-Campbell-Hausdorff product
//
//   u * v = u + v + 1/2 [u,v] + 1/12 ([u,[u,v]] + [v,[v,u]]),
//
// which is exact for nilpotency step <= 3.

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sublab/errors.hpp"

namespace sublab {

inline constexpr int kMaxDim = 8;
inline constexpr double kValidationTol = 1e-10;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Graded Lie algebra vector in the adapted basis e_1..e_n.
using AlgebraVector = Vec;

/// Group element in exponential coordinates; the identity is the zero vector.
struct Point {
  Vec coords;

  Point() = default;
  explicit Point(Vec c) : coords(std::move(c)) {}

  [[nodiscard]] int dim() const { return static_cast<int>(coords.size()); }
  bool operator==(const Point& other) const {
    return coords.size() == other.coords.size() && coords == other.coords;
  }
};

/// A vector of the horizontal fiber at `base`, stored as its coefficients in the
/// left-invariant orthonormal frame X_1(base), ..., X_m(base).
struct HorizontalVector {
  Point base;
  Vec h;
};

struct BracketEntry {
  int i = 0;  // 0-based basis indices, i != j
  int j = 0;
  std::vector<std::pair<int, double>> out;  // [e_i, e_j] = sum coeff * e_index
};

struct GroupSpec {
  std::string name;
  std::vector<int> layer_dims;
  std::vector<BracketEntry> brackets;
};

/// Immutable, validated group with precomputed structure constants.
class Group {
 public:
  [[nodiscard]] const std::string& name() const { return spec_.name; }
  [[nodiscard]] const GroupSpec& spec() const { return spec_; }
  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] int rank() const { return m_; }  // dimension of the first layer
  [[nodiscard]] int step() const { return static_cast<int>(spec_.layer_dims.size()); }
  /// Layer (1-based degree) of basis index i.
  [[nodiscard]] int weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] Point identity() const { return Point(Vec::Zero(n_)); }
  [[nodiscard]] Point point(std::initializer_list<double> coords) const;
  /// exp of a first-layer vector with coefficients h.
  [[nodiscard]] Point exp_horizontal(const Vec& h) const;

  [[nodiscard]] AlgebraVector bracket(const AlgebraVector& u, const AlgebraVector& v) const;
  [[nodiscard]] AlgebraVector bch(const AlgebraVector& u, const AlgebraVector& v) const;

  [[nodiscard]] Point mul(const Point& x, const Point& y) const;
  [[nodiscard]] Point inverse(const Point& x) const;
  /// x^{-1} y
  [[nodiscard]] Point relative(const Point& x, const Point& y) const;
  [[nodiscard]] Point dilate(double lambda, const Point& x) const;

  /// Jacobians of (u, v) -> u * v with respect to u and v.
  [[nodiscard]] Mat d_bch_left(const AlgebraVector& u, const AlgebraVector& v) const;
  [[nodiscard]] Mat d_bch_right(const AlgebraVector& u, const AlgebraVector& v) const;

  /// n x m matrix whose column j is X_j(x) = d_e tau_x [e_j].
  [[nodiscard]] Mat horizontal_frame(const Point& x) const;

  [[nodiscard]] HorizontalVector embed_horizontal(const Point& x, const Vec& layer1) const;
  /// pi_x(y): coefficients of sum_{j <= m} y_j X_j(x).
  [[nodiscard]] HorizontalVector project_pi(const Point& x, const Point& y) const;
  [[nodiscard]] double fiber_inner(const HorizontalVector& u, const HorizontalVector& w) const;
  [[nodiscard]] double fiber_norm(const HorizontalVector& u) const;

  /// Homogeneous gauge sum_i |z_i|^{1/w_i}.
  [[nodiscard]] double gauge(const Vec& z) const;
  [[nodiscard]] Vec layer1(const Vec& z) const { return z.head(m_); }

  friend std::shared_ptr<const Group> validate_spec(const GroupSpec& spec);

 private:
  struct Term {
    int i;
    int j;
    int k;
    double c;  // [e_i, e_j] has coefficient c on e_k, stored for i < j
  };

  explicit Group(GroupSpec spec);

  GroupSpec spec_;
  int n_ = 0;
  int m_ = 0;
  std::vector<int> weights_;
  std::vector<Term> terms_;
};

using GroupPtr = std::shared_ptr<const Group>;

/// Validates the stratification and returns a shareable group handle.
GroupPtr validate_spec(const GroupSpec& spec);

/// Built-in registry: "abelian2", "heisenberg1", "heisenberg2", "engel".
GroupSpec builtin_group_spec(const std::string& name);
GroupPtr builtin_group(const std::string& name);
std::vector<std::string> builtin_group_names();

}  // namespace sublab
