#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "sublab/mderiv.hpp"

namespace sublab::app {

using nlohmann::json;

namespace {

std::string child(const std::string& field, const std::string& key) { return field + "/" + key; }
std::string child(const std::string& field, std::size_t index) { return field + "/" + std::to_string(index); }

void allow_keys(const json& j, const std::string& field, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(field, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(child(field, k), "unknown field");
  }
}

const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.contains(key)) throw ConfigError(child(field, key), "required field is missing");
  return j.at(key);
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "expected a finite number");
  return v;
}

double number_or(const json& j, const char* key, const std::string& field, double fallback) {
  return j.contains(key) ? as_number(j.at(key), child(field, key)) : fallback;
}

int as_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<int>();
}

int int_or(const json& j, const char* key, const std::string& field, int fallback) {
  return j.contains(key) ? as_int(j.at(key), child(field, key)) : fallback;
}

int positive_int_or(const json& j, const char* key, const std::string& field, int fallback) {
  const int v = int_or(j, key, field, fallback);
  if (v < 1) throw ConfigError(child(field, key), "must be positive");
  return v;
}

double positive_or(const json& j, const char* key, const std::string& field, double fallback) {
  const double v = number_or(j, key, field, fallback);
  if (!(v > 0.0)) throw ConfigError(child(field, key), "must be positive");
  return v;
}

std::string as_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

Vec as_vec(const json& j, const std::string& field, int size) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  if (size >= 0 && static_cast<int>(j.size()) != size) {
    throw ConfigError(field, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  if (j.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError(field, "too many entries");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_number(j[i], child(field, i));
  return v;
}

std::vector<int> as_int_list(const json& j, const std::string& field, bool positive) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a nonempty array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const int v = as_int(j[i], child(field, i));
    if (positive && v < 1) throw ConfigError(child(field, i), "must be positive");
    out.push_back(v);
  }
  return out;
}

Point as_point(const json& j, const std::string& field, const Group& g) { return Point(as_vec(j, field, g.dim())); }

void parse_box(const json& j, const std::string& field, int dim, Vec& lo, Vec& hi) {
  allow_keys(j, field, {"lo", "hi"});
  lo = as_vec(require(j, "lo", field), child(field, "lo"), dim);
  hi = as_vec(require(j, "hi", field), child(field, "hi"), dim);
  for (int i = 0; i < dim; ++i) {
    if (!(lo(i) <= hi(i))) throw ConfigError(child(field, "lo"), "box corner lo exceeds hi");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, const std::string& field,
                                                  std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  try {
    rows = read_csv_numbers(in, true);
  } catch (const std::exception& e) {
    throw ConfigError(field, path.string() + ": " + e.what());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns) {
      throw ConfigError(field, path.string() + ": row " + std::to_string(r + 1) + " has " +
                                   std::to_string(rows[r].size()) + " columns, expected " + std::to_string(columns));
    }
  }
  return rows;
}

SolverConfig parse_solver(const json& j, const std::string& field) {
  SolverConfig c;
  if (j.is_null()) return c;
  allow_keys(j, field,
             {"segments", "multistarts", "penalty_schedule", "max_iters", "step_tol", "refine_levels", "endpoint_tol",
              "fd_step", "penalty_iters"});
  c.segments = positive_int_or(j, "segments", field, c.segments);
  c.multistarts = positive_int_or(j, "multistarts", field, c.multistarts);
  c.max_iters = positive_int_or(j, "max_iters", field, c.max_iters);
  c.penalty_iters = int_or(j, "penalty_iters", field, c.penalty_iters);
  if (c.penalty_iters < 0) throw ConfigError(child(field, "penalty_iters"), "must be nonnegative");
  c.refine_levels = int_or(j, "refine_levels", field, c.refine_levels);
  if (c.refine_levels < 0 || c.refine_levels > 6) throw ConfigError(child(field, "refine_levels"), "must be in [0, 6]");
  c.step_tol = positive_or(j, "step_tol", field, c.step_tol);
  c.endpoint_tol = positive_or(j, "endpoint_tol", field, c.endpoint_tol);
  c.fd_step = positive_or(j, "fd_step", field, c.fd_step);
  if (j.contains("penalty_schedule")) {
    const std::string f = child(field, "penalty_schedule");
    const Vec w = as_vec(j.at("penalty_schedule"), f, -1);
    if (w.size() == 0) throw ConfigError(f, "must not be empty");
    c.penalty_schedule.assign(w.data(), w.data() + w.size());
    for (double v : c.penalty_schedule) {
      if (!(v > 0.0)) throw ConfigError(f, "weights must be positive");
    }
  }
  return c;
}

std::vector<std::pair<Point, Point>> parse_pairs(const json& doc, const Group& g,
                                                 const std::filesystem::path& base_dir) {
  std::vector<std::pair<Point, Point>> out;
  if (doc.contains("pairs") == doc.contains("pairs_csv")) {
    throw ConfigError("/pairs", "give exactly one of pairs and pairs_csv");
  }
  if (doc.contains("pairs")) {
    const json& p = doc.at("pairs");
    if (!p.is_array() || p.empty()) throw ConfigError("/pairs", "expected a nonempty array of [x, y] pairs");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string f = child("/pairs", i);
      if (!p[i].is_array() || p[i].size() != 2) throw ConfigError(f, "expected [x, y]");
      out.emplace_back(as_point(p[i][0], child(f, 0), g), as_point(p[i][1], child(f, 1), g));
    }
    return out;
  }
  const auto dim = static_cast<std::size_t>(g.dim());
  const auto rows = read_numeric_csv(resolve(base_dir, as_string(doc.at("pairs_csv"), "/pairs_csv")), "/pairs_csv",
                                     2 * dim);
  if (rows.empty()) throw ConfigError("/pairs_csv", "no rows");
  for (const auto& r : rows) {
    Vec x(g.dim()), y(g.dim());
    for (std::size_t i = 0; i < dim; ++i) {
      x(static_cast<Eigen::Index>(i)) = r[i];
      y(static_cast<Eigen::Index>(i)) = r[dim + i];
    }
    out.emplace_back(Point(x), Point(y));
  }
  return out;
}

std::vector<HorizontalSample> parse_samples(const json& doc, const Group& g, std::uint64_t seed) {
  std::vector<HorizontalSample> out;
  if (doc.contains("samples") == doc.contains("random_samples")) {
    throw ConfigError("/samples", "give exactly one of samples and random_samples");
  }
  if (doc.contains("samples")) {
    const json& s = doc.at("samples");
    if (!s.is_array() || s.empty()) throw ConfigError("/samples", "expected a nonempty array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string f = child("/samples", i);
      allow_keys(s[i], f, {"x", "h"});
      out.push_back({as_point(require(s[i], "x", f), child(f, "x"), g),
                     as_vec(require(s[i], "h", f), child(f, "h"), g.rank())});
    }
    return out;
  }
  const json& r = doc.at("random_samples");
  allow_keys(r, "/random_samples", {"count", "radius"});
  const int count = positive_int_or(r, "count", "/random_samples", 10);
  const double radius = positive_or(r, "radius", "/random_samples", 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-radius, radius);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vec x(g.dim()), h(g.rank());
    for (int i = 0; i < g.dim(); ++i) x(i) = box(rng);
    do {
      for (int i = 0; i < g.rank(); ++i) h(i) = unit(rng);
    } while (h.norm() < 0.1);
    out.push_back({Point(x), h});
  }
  return out;
}

Polynomial parse_polynomial(const json& j, const std::string& field, int rank) {
  allow_keys(j, field, {"linear", "terms"});
  Polynomial p;
  if (j.contains("linear") == j.contains("terms")) throw ConfigError(field, "give exactly one of linear and terms");
  if (j.contains("linear")) {
    const Vec c = as_vec(j.at("linear"), child(field, "linear"), rank);
    for (int i = 0; i < rank; ++i) {
      PolynomialTerm t;
      t.coef = c(i);
      t.powers.assign(static_cast<std::size_t>(rank), 0);
      t.powers[static_cast<std::size_t>(i)] = 1;
      p.terms.push_back(std::move(t));
    }
    return p;
  }
  const json& terms = j.at("terms");
  if (!terms.is_array() || terms.empty()) throw ConfigError(child(field, "terms"), "expected a nonempty array");
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const std::string f = child(child(field, "terms"), k);
    allow_keys(terms[k], f, {"coef", "powers"});
    PolynomialTerm t;
    t.coef = as_number(require(terms[k], "coef", f), child(f, "coef"));
    const json& pw = require(terms[k], "powers", f);
    if (!pw.is_array() || static_cast<int>(pw.size()) != rank) {
      throw ConfigError(child(f, "powers"), "expected one exponent per first-layer coordinate");
    }
    for (std::size_t i = 0; i < pw.size(); ++i) {
      const int e = as_int(pw[i], child(child(f, "powers"), i));
      if (e < 0) throw ConfigError(child(child(f, "powers"), i), "exponents must be nonnegative");
      t.powers.push_back(e);
    }
    p.terms.push_back(std::move(t));
  }
  return p;
}

GammaSettings parse_gamma(const json& doc, const Group& g, const std::string& field) {
  const json& j = require(doc, "gamma", "");
  allow_keys(j, field, {"family", "epsilon", "amplitude", "segments_per_period", "measure", "drift", "weight_rate", "ns",
                        "grid_per_axis"});
  GammaSettings s;
  const std::string fam = as_string(require(j, "family", field), child(field, "family"));
  if (fam == "scaling") {
    s.family = FamilyKind::Scaling;
  } else if (fam == "laminate") {
    s.family = FamilyKind::Laminate;
  } else if (fam == "constant") {
    s.family = FamilyKind::Constant;
  } else {
    throw ConfigError(child(field, "family"), "unknown family '" + fam + "' (scaling, laminate, constant)");
  }
  s.epsilon = number_or(j, "epsilon", field, s.epsilon);
  if (!(s.epsilon > -1.0)) throw ConfigError(child(field, "epsilon"), "must exceed -1");
  s.amplitude = number_or(j, "amplitude", field, s.amplitude);
  if (!(s.amplitude >= 0.0 && s.amplitude < 1.0)) throw ConfigError(child(field, "amplitude"), "must be in [0, 1)");
  s.segments_per_period = positive_int_or(j, "segments_per_period", field, s.segments_per_period);
  s.weight_rate = number_or(j, "weight_rate", field, 0.0);
  s.ns = as_int_list(require(j, "ns", field), child(field, "ns"), true);
  s.grid_per_axis = int_or(j, "grid_per_axis", field, 0);
  if (s.grid_per_axis < 0 || s.grid_per_axis == 1) throw ConfigError(child(field, "grid_per_axis"), "must be 0 or at least 2");
  if (j.contains("drift")) s.drift = as_point(j.at("drift"), child(field, "drift"), g);

  const std::string mf = child(field, "measure");
  const json& m = require(j, "measure", field);
  allow_keys(m, mf, {"box", "atoms"});
  parse_box(require(m, "box", mf), child(mf, "box"), g.dim(), s.box_lo, s.box_hi);
  const json& atoms = require(m, "atoms", mf);
  if (!atoms.is_array() || atoms.empty()) throw ConfigError(child(mf, "atoms"), "expected a nonempty array");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string f = child(child(mf, "atoms"), i);
    allow_keys(atoms[i], f, {"x", "y", "w"});
    Atom a;
    a.x = as_point(require(atoms[i], "x", f), child(f, "x"), g);
    a.y = as_point(require(atoms[i], "y", f), child(f, "y"), g);
    a.w = positive_or(atoms[i], "w", f, 1.0);
    s.atoms.push_back(std::move(a));
  }
  try {
    AtomicMeasure check(s.atoms, s.box_lo, s.box_hi);
    if (s.drift) {
      for (int n : s.ns) drift_measure(g, check, *s.drift, n, s.weight_rate);
    }
  } catch (const Error& e) {
    throw ConfigError(mf, e.what());
  }
  if (s.family == FamilyKind::Laminate && g.rank() < 2) throw ConfigError(child(field, "family"), "laminate needs rank >= 2");
  return s;
}

ApproxSettings parse_approx(const json& doc, const Group& g, const std::string& field) {
  const json& j = require(doc, "approx", "");
  allow_keys(j, field, {"function", "lipschitz", "anchors", "test_points", "box", "ns", "anchor_counts"});
  ApproxSettings s;
  s.function = parse_polynomial(require(j, "function", field), child(field, "function"), g.rank());
  s.lipschitz = positive_or(j, "lipschitz", field, 1.0);
  s.anchor_count = positive_int_or(j, "anchors", field, 64);
  s.test_count = positive_int_or(j, "test_points", field, 100);
  parse_box(require(j, "box", field), child(field, "box"), g.dim(), s.box_lo, s.box_hi);
  s.ns = as_int_list(require(j, "ns", field), child(field, "ns"), true);
  s.anchor_counts = as_int_list(require(j, "anchor_counts", field), child(field, "anchor_counts"), true);
  if (s.ns.size() != s.anchor_counts.size()) {
    throw ConfigError(child(field, "anchor_counts"), "needs one entry per n");
  }
  for (std::size_t i = 1; i < s.anchor_counts.size(); ++i) {
    if (s.anchor_counts[i] < s.anchor_counts[i - 1]) {
      throw ConfigError(child(child(field, "anchor_counts"), i), "must be nondecreasing");
    }
  }
  if (s.anchor_counts.back() > s.anchor_count) {
    throw ConfigError(child(field, "anchor_counts"), "exceeds the number of anchors");
  }
  return s;
}

Regularity parse_regularity(const json& j, const std::string& field, Regularity fallback) {
  if (!j.contains("regularity")) return fallback;
  const std::string s = as_string(j.at("regularity"), child(field, "regularity"));
  try {
    return regularity_from_string(s);
  } catch (const Error&) {
    throw ConfigError(child(field, "regularity"), "unknown regularity '" + s + "'");
  }
}

}  // namespace

double Polynomial::operator()(const Point& x) const {
  double total = 0.0;
  for (const auto& t : terms) {
    double v = t.coef;
    for (std::size_t i = 0; i < t.powers.size(); ++i) v *= std::pow(x.coords(static_cast<Eigen::Index>(i)), t.powers[i]);
    total += v;
  }
  return total;
}

Vec Polynomial::gradient(const Point& x, int rank) const {
  // Only first-layer coordinates enter, and X_k = d/dx_k + higher-layer terms.
  Vec grad = Vec::Zero(rank);
  for (const auto& t : terms) {
    for (int k = 0; k < rank; ++k) {
      const int pk = t.powers[static_cast<std::size_t>(k)];
      if (pk == 0) continue;
      double v = t.coef * pk;
      for (std::size_t i = 0; i < t.powers.size(); ++i) {
        const int e = static_cast<int>(i) == k ? pk - 1 : t.powers[i];
        v *= std::pow(x.coords(static_cast<Eigen::Index>(i)), e);
      }
      grad(k) += v;
    }
  }
  return grad;
}

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Dist: return "dist";
    case ExperimentKind::Sphere: return "sphere";
    case ExperimentKind::Dual: return "dual";
    case ExperimentKind::Mder: return "mder";
    case ExperimentKind::DualityGap: return "duality-gap";
    case ExperimentKind::Gamma: return "gamma";
    case ExperimentKind::Approx: return "approx";
  }
  return "?";
}

std::vector<std::string> experiment_kind_names() {
  return {"dist", "sphere", "dual", "mder", "duality-gap", "gamma", "approx"};
}

std::vector<std::string> metric_kind_names() {
  return {"euclidean", "elliptic", "oscillating", "polyhedral", "l1", "linf", "two_phase", "laminate", "scaled",
          "nonconvex_min"};
}

GroupPtr group_from_json(const json& j, const std::string& field) {
  if (j.is_string()) {
    try {
      return builtin_group(j.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  }
  allow_keys(j, field, {"name", "layers", "brackets"});
  GroupSpec spec;
  spec.name = j.contains("name") ? as_string(j.at("name"), child(field, "name")) : "custom";
  spec.layer_dims = as_int_list(require(j, "layers", field), child(field, "layers"), true);
  int dim = 0;
  for (int d : spec.layer_dims) dim += d;
  if (dim > kMaxDim) throw ConfigError(child(field, "layers"), "total dimension exceeds " + std::to_string(kMaxDim));
  const std::string bf = child(field, "brackets");
  const json& br = j.contains("brackets") ? j.at("brackets") : json::array();
  if (!br.is_array()) throw ConfigError(bf, "expected an array");
  // Basis indices are 1-based in configuration files.
  auto index = [dim](const json& v, const std::string& f) {
    const int i = as_int(v, f);
    if (i < 1 || i > dim) throw ConfigError(f, "basis index out of range 1.." + std::to_string(dim));
    return i - 1;
  };
  for (std::size_t k = 0; k < br.size(); ++k) {
    const std::string f = child(bf, k);
    allow_keys(br[k], f, {"i", "j", "out"});
    BracketEntry e;
    e.i = index(require(br[k], "i", f), child(f, "i"));
    e.j = index(require(br[k], "j", f), child(f, "j"));
    const json& out = require(br[k], "out", f);
    if (!out.is_array()) throw ConfigError(child(f, "out"), "expected [[index, coefficient], ...]");
    for (std::size_t t = 0; t < out.size(); ++t) {
      const std::string tf = child(child(f, "out"), t);
      if (!out[t].is_array() || out[t].size() != 2) throw ConfigError(tf, "expected [index, coefficient]");
      e.out.emplace_back(index(out[t][0], child(tf, 0)), as_number(out[t][1], child(tf, 1)));
    }
    spec.brackets.push_back(std::move(e));
  }
  try {
    return validate_spec(spec);
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
}

SubFinslerMetric metric_from_json(const json& j, const Group& g, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "expected an object with a kind");
  const std::string kind = as_string(require(j, "kind", field), child(field, "kind"));
  const int m = g.rank();
  try {
    if (kind == "euclidean") {
      allow_keys(j, field, {"kind"});
      return make_euclidean(m);
    }
    if (kind == "elliptic") {
      allow_keys(j, field, {"kind", "matrix", "regularity"});
      const std::string mf = child(field, "matrix");
      const json& rows = require(j, "matrix", field);
      if (!rows.is_array() || static_cast<int>(rows.size()) != m) throw ConfigError(mf, "expected an m x m matrix");
      Mat A(m, m);
      for (int r = 0; r < m; ++r) A.row(r) = as_vec(rows[static_cast<std::size_t>(r)], child(mf, static_cast<std::size_t>(r)), m).transpose();
      if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError(mf, "matrix is not symmetric");
      const Eigen::SelfAdjointEigenSolver<Mat> es(A);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (!(lo > 0.0)) throw ConfigError(mf, "matrix is not positive definite");
      const double alpha = std::max({1.0, std::sqrt(hi), 1.0 / std::sqrt(lo)});
      return make_elliptic("elliptic", m, [A](const Point&) { return A; }, alpha, {g.identity()}, true,
                           parse_regularity(j, field, Regularity::Continuous));
    }
    if (kind == "oscillating") {
      allow_keys(j, field, {"kind", "omega", "kappa"});
      return make_oscillating(g, number_or(j, "omega", field, 1.0), positive_or(j, "kappa", field, std::log(2.0)));
    }
    if (kind == "polyhedral") {
      allow_keys(j, field, {"kind", "vertices", "alpha"});
      const std::string vf = child(field, "vertices");
      const json& vs = require(j, "vertices", field);
      if (!vs.is_array() || vs.empty()) throw ConfigError(vf, "expected a nonempty array of vertices");
      std::vector<Vec> V;
      for (std::size_t i = 0; i < vs.size(); ++i) V.push_back(as_vec(vs[i], child(vf, i), m));
      const double alpha = as_number(require(j, "alpha", field), child(field, "alpha"));
      return make_polyhedral("polyhedral", m, [V](const Point&) { return V; }, alpha, {g.identity()}, true);
    }
    if (kind == "l1" || kind == "linf") {
      allow_keys(j, field, {"kind"});
      return make_lp_gauge(m, kind);
    }
    if (kind == "two_phase") {
      allow_keys(j, field, {"kind", "interface", "low", "high", "side"});
      const std::string side = as_string(require(j, "side", field), child(field, "side"));
      if (side != "lsc" && side != "usc") throw ConfigError(child(field, "side"), "expected lsc or usc");
      return make_two_phase(m, number_or(j, "interface", field, 0.0), positive_or(j, "low", field, 1.0),
                            positive_or(j, "high", field, 2.0),
                            side == "lsc" ? Regularity::LowerSemicontinuous : Regularity::UpperSemicontinuous);
    }
    if (kind == "laminate") {
      allow_keys(j, field, {"kind", "frequency", "amplitude"});
      return make_laminate(m, positive_or(j, "frequency", field, 1.0), number_or(j, "amplitude", field, 0.5));
    }
    if (kind == "scaled") {
      allow_keys(j, field, {"kind", "factor", "base"});
      return scaled(metric_from_json(require(j, "base", field), g, child(field, "base")),
                    positive_or(j, "factor", field, 1.0));
    }
    if (kind == "nonconvex_min") {
      allow_keys(j, field, {"kind", "c"});
      return make_nonconvex_min(m, positive_or(j, "c", field, 0.8));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(child(field, "kind"), "unknown metric kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  allow_keys(doc, "",
             {"experiment", "seed", "group", "metric", "solver", "threads", "strict", "output_dir", "pairs", "pairs_csv",
              "write_curves", "center", "radius", "directions", "samples", "random_samples", "schedule", "grid",
              "gamma", "approx"});
  ExperimentConfig c;
  const std::string kind = as_string(require(doc, "experiment", ""), "/experiment");
  const auto names = experiment_kind_names();
  const auto it = std::find(names.begin(), names.end(), kind);
  if (it == names.end()) throw ConfigError("/experiment", "unknown experiment '" + kind + "'");
  c.kind = static_cast<ExperimentKind>(it - names.begin());

  const json& seed = require(doc, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ConfigError("/seed", "expected a nonnegative integer");
  }
  c.seed = seed.get<std::uint64_t>();
  c.group = group_from_json(require(doc, "group", ""), "/group");
  const Group& g = *c.group;
  c.solver = parse_solver(doc.contains("solver") ? doc.at("solver") : json(), "/solver");
  c.solver.seed = c.seed;
  c.threads = positive_int_or(doc, "threads", "", 1);
  if (doc.contains("strict")) {
    if (!doc.at("strict").is_boolean()) throw ConfigError("/strict", "expected true or false");
    c.strict = doc.at("strict").get<bool>();
  }
  if (doc.contains("output_dir")) c.output_dir = resolve(base_dir, as_string(doc.at("output_dir"), "/output_dir"));

  const bool needs_metric = c.kind != ExperimentKind::Gamma ||
                            (doc.contains("gamma") && doc.at("gamma").value("family", "") != "laminate");
  if (needs_metric) {
    c.metric_json = require(doc, "metric", "");
    c.metric = metric_from_json(c.metric_json, g, "/metric");
  } else if (doc.contains("metric")) {
    throw ConfigError("/metric", "the laminate family defines its own metrics");
  }

  switch (c.kind) {
    case ExperimentKind::Dist:
      c.pairs = parse_pairs(doc, g, base_dir);
      if (doc.contains("write_curves")) {
        if (!doc.at("write_curves").is_boolean()) throw ConfigError("/write_curves", "expected true or false");
        c.write_curves = doc.at("write_curves").get<bool>();
      }
      break;
    case ExperimentKind::Sphere:
      c.center = doc.contains("center") ? as_point(doc.at("center"), "/center", g) : g.identity();
      c.radius = positive_or(doc, "radius", "", 1.0);
      c.directions = positive_int_or(doc, "directions", "", 16);
      break;
    case ExperimentKind::Dual:
      c.samples = parse_samples(doc, g, c.seed);
      break;
    case ExperimentKind::Mder:
      c.samples = parse_samples(doc, g, c.seed);
      if (doc.contains("schedule")) {
        const Vec s = as_vec(doc.at("schedule"), "/schedule", -1);
        c.schedule.assign(s.data(), s.data() + s.size());
        if (c.schedule.size() < 3) throw ConfigError("/schedule", "needs at least three values");
        for (std::size_t k = 0; k < c.schedule.size(); ++k) {
          if (!(c.schedule[k] > 0.0) || (k > 0 && !(c.schedule[k] < c.schedule[k - 1]))) {
            throw ConfigError("/schedule", "must be positive and strictly decreasing");
          }
        }
      } else {
        c.schedule = default_t_schedule();
      }
      if (!c.metric.convex) throw ConfigError("/metric", "metric derivative comparison needs a convex metric");
      break;
    case ExperimentKind::DualityGap:
      c.pairs = parse_pairs(doc, g, base_dir);
      if (doc.contains("grid")) {
        allow_keys(doc.at("grid"), "/grid", {"count", "radius"});
        c.grid_count = positive_int_or(doc.at("grid"), "count", "/grid", c.grid_count);
        c.grid_radius = positive_or(doc.at("grid"), "radius", "/grid", c.grid_radius);
      }
      break;
    case ExperimentKind::Gamma:
      c.gamma = parse_gamma(doc, g, "/gamma");
      break;
    case ExperimentKind::Approx:
      c.approx = parse_approx(doc, g, "/approx");
      break;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace sublab::app
