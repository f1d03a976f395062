#pragma once

// Experiment configuration: one JSON document per run. Parsing resolves
// builtin names, checks every field and reports the first problem with its
// JSON path; nothing is executed here.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sublab/carnot.hpp"
#include "sublab/gamma.hpp"
#include "sublab/metrics.hpp"
#include "sublab/solver.hpp"

namespace sublab::app {

enum class ExperimentKind { Dist, Sphere, Dual, Mder, DualityGap, Gamma, Approx };

std::string_view to_string(ExperimentKind k);
std::vector<std::string> experiment_kind_names();
std::vector<std::string> metric_kind_names();

/// Thrown for anything that makes a configuration unusable; `field` is a
/// JSON pointer such as /metric/kind.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorCode::ConfigInvalid, field + ": " + what), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PolynomialTerm {
  double coef = 0.0;
  std::vector<int> powers;  // one exponent per first-layer coordinate
};

/// sum coef * prod x_i^p_i over first-layer coordinates.
struct Polynomial {
  std::vector<PolynomialTerm> terms;
  [[nodiscard]] double operator()(const Point& x) const;
  [[nodiscard]] Vec gradient(const Point& x, int rank) const;
};

struct GammaSettings {
  FamilyKind family = FamilyKind::Scaling;
  double epsilon = 1.0;
  double amplitude = 0.5;
  int segments_per_period = 16;
  std::vector<Atom> atoms;
  Vec box_lo, box_hi;
  std::optional<Point> drift;
  double weight_rate = 0.0;
  std::vector<int> ns;
  int grid_per_axis = 0;  // 0 skips the uniform-gap and equicontinuity rows
};

struct ApproxSettings {
  Polynomial function;
  double lipschitz = 1.0;
  int anchor_count = 0;
  int test_count = 0;
  Vec box_lo, box_hi;
  std::vector<int> ns;
  std::vector<int> anchor_counts;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Dist;
  std::uint64_t seed = 0;
  GroupPtr group;
  nlohmann::json metric_json;
  SubFinslerMetric metric;
  SolverConfig solver;
  int threads = 1;
  bool strict = false;
  std::optional<std::filesystem::path> output_dir;

  std::vector<std::pair<Point, Point>> pairs;  // dist, duality-gap
  bool write_curves = false;                   // dist
  Point center;                                // sphere
  double radius = 1.0;
  int directions = 16;
  std::vector<HorizontalSample> samples;       // dual, mder
  std::vector<double> schedule;                // mder
  int grid_count = 24;                         // duality-gap
  double grid_radius = 0.5;
  GammaSettings gamma;
  ApproxSettings approx;
};

/// Parses and validates; relative CSV paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

GroupPtr group_from_json(const nlohmann::json& j, const std::string& field);
SubFinslerMetric metric_from_json(const nlohmann::json& j, const Group& g, const std::string& field);

}  // namespace sublab::app
