#include "runner.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "csv.hpp"
#include "sublab/duality.hpp"
#include "sublab/mderiv.hpp"
#include "sublab/parallel.hpp"

#ifndef SUBLAB_VERSION
#define SUBLAB_VERSION "0.0.0"
#endif

namespace sublab::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string status_of(const Error& e) { return std::string(to_string(e.code())); }

ExperimentOutput run_dist(const ExperimentConfig& cfg) {
  const Group& g = *cfg.group;
  const DistanceOracle d(cfg.group, cfg.metric, cfg.solver);
  std::vector<DistanceEstimate> est(cfg.pairs.size());
  std::vector<std::string> status(cfg.pairs.size(), "ok");
  parallel_for(cfg.pairs.size(), cfg.threads, [&](std::size_t i) {
    try {
      est[i] = d.estimate(cfg.pairs[i].first, cfg.pairs[i].second);
    } catch (const Error& e) {
      status[i] = status_of(e);
    }
  });
  ExperimentOutput out;
  CsvTable t(concat(concat(concat({"index"}, numbered("x", g.dim())), numbered("y", g.dim())),
                    {"lower", "upper", "width", "converged", "iterations", "endpoint_gap", "lower_witness", "status"}));
  for (std::size_t i = 0; i < cfg.pairs.size(); ++i) {
    t.cell(i).cells(cfg.pairs[i].first.coords).cells(cfg.pairs[i].second.coords);
    if (status[i] == "ok") {
      const auto& e = est[i];
      t.cell(e.lower).cell(e.upper).cell(e.upper - e.lower).cell(e.converged).cell(e.iterations).cell(e.endpoint_gap);
      t.cell(e.lower_witness).cell(status[i]);
      if (!e.converged) ++out.nonconverged;
      if (cfg.write_curves) {
        std::ostringstream os;
        write_curve_csv(os, e.curve);
        out.files.push_back({"curve_" + std::to_string(i) + ".csv", os.str()});
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.cell(nan).cell(nan).cell(nan).cell(false).cell(0).cell(nan).cell("none").cell(status[i]);
      ++out.failed;
    }
    t.end_row();
  }
  out.files.insert(out.files.begin(), {"distances.csv", t.str()});
  return out;
}

ExperimentOutput run_sphere(const ExperimentConfig& cfg) {
  const Group& g = *cfg.group;
  const DistanceOracle d(cfg.group, cfg.metric, cfg.solver);
  const auto pts = sphere_sample(d, cfg.center, cfg.radius, cfg.directions);
  std::vector<double> dist(pts.size());
  parallel_for(pts.size(), cfg.threads, [&](std::size_t i) { dist[i] = d.upper(cfg.center, pts[i]); });
  CsvTable t(concat(concat({"index"}, numbered("x", g.dim())), {"distance", "relative_error"}));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.cell(i).cells(pts[i].coords).cell(dist[i]).cell((dist[i] - cfg.radius) / cfg.radius);
    t.end_row();
  }
  return {{{"sphere.csv", t.str()}}, 0, 0};
}

ExperimentOutput run_dual(const ExperimentConfig& cfg) {
  const Group& g = *cfg.group;
  const SubFinslerMetric star = dual_metric(cfg.metric);
  const auto& S = cfg.samples;
  std::vector<double> phi(S.size()), bi(S.size());
  std::vector<DualValue> dv(S.size());
  parallel_for(S.size(), cfg.threads, [&](std::size_t i) {
    phi[i] = cfg.metric(S[i].x, S[i].h);
    dv[i] = dual_eval_detailed(cfg.metric, S[i].x, S[i].h);
    bi[i] = dual_eval(star, S[i].x, S[i].h);
  });
  CsvTable t(concat(concat(concat({"index"}, numbered("x", g.dim())), numbered("h", g.rank())),
                    {"phi", "phi_star", "phi_star_error_bound", "phi_bidual", "bidual_relative_gap"}));
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double gap = phi[i] > 0.0 ? (bi[i] - phi[i]) / phi[i] : 0.0;
    t.cell(i).cells(S[i].x.coords).cells(S[i].h).cell(phi[i]).cell(dv[i].value).cell(dv[i].error_bound);
    t.cell(bi[i]).cell(gap);
    t.end_row();
  }
  const BidualReport rep = bidual_check(cfg.metric, S);
  CsvTable s({"strategy", "samples", "max_relative_gap", "min_signed_gap", "bound", "passed"});
  s.cell(std::string(to_string(rep.strategy))).cell(S.size()).cell(rep.max_relative_gap).cell(rep.min_signed_gap);
  s.cell(rep.bound).cell(rep.passed);
  s.end_row();
  return {{{"dual.csv", t.str()}, {"dual_summary.csv", s.str()}}, 0, 0};
}

ExperimentOutput run_mder(const ExperimentConfig& cfg) {
  const Group& g = *cfg.group;
  std::vector<HorizontalVector> hv;
  for (const auto& s : cfg.samples) hv.push_back({s.x, s.h});
  const ComparisonReport rep = compare_with_metric(cfg.group, cfg.metric, hv, cfg.solver, cfg.schedule, cfg.threads);
  CsvTable t(concat(concat(concat({"index"}, numbered("x", g.dim())), numbered("v", g.rank())),
                    {"phi_d", "psi", "gap", "tolerance", "richardson_disagreement", "spread", "ok", "flagged"}));
  CsvTable r({"index", "t", "ratio"});
  ExperimentOutput out;
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const auto& c = rep.samples[i];
    t.cell(i).cells(c.x.coords).cells(c.v).cell(c.phi_d).cell(c.psi).cell(c.gap).cell(c.tol);
    t.cell(c.estimate.richardson_disagreement).cell(c.estimate.spread).cell(c.ok).cell(c.flagged);
    t.end_row();
    if (!c.ok) ++out.nonconverged;
    for (std::size_t k = 0; k < c.estimate.t_values.size(); ++k) {
      r.cell(i).cell(c.estimate.t_values[k]).cell(c.estimate.ratios[k]);
      r.end_row();
    }
  }
  out.files = {{"mder.csv", t.str()}, {"mder_ratios.csv", r.str()}};
  return out;
}

ExperimentOutput run_duality_gap(const ExperimentConfig& cfg) {
  const Group& g = *cfg.group;
  const DualityLab lab(cfg.group, cfg.metric, cfg.solver, default_relative_grid(g, cfg.grid_count, cfg.grid_radius),
                       1);
  std::vector<DualityGap> gaps(cfg.pairs.size());
  std::vector<std::string> status(cfg.pairs.size(), "ok");
  parallel_for(cfg.pairs.size(), cfg.threads, [&](std::size_t i) {
    try {
      gaps[i] = lab.duality_gap(cfg.pairs[i].first, cfg.pairs[i].second);
    } catch (const Error& e) {
      status[i] = status_of(e);
    }
  });
  ExperimentOutput out;
  CsvTable t(concat(concat(concat({"index"}, numbered("x", g.dim())), numbered("y", g.dim())),
                    {"delta_lower", "d_dual_upper", "relative_gap", "margin", "ordering_ok", "status"}));
  for (std::size_t i = 0; i < cfg.pairs.size(); ++i) {
    const auto& d = gaps[i];
    t.cell(i).cells(cfg.pairs[i].first.coords).cells(cfg.pairs[i].second.coords);
    t.cell(d.delta_lower).cell(d.d_dual_upper).cell(d.relative_gap).cell(d.margin).cell(d.ordering_ok).cell(status[i]);
    t.end_row();
    if (status[i] != "ok") ++out.failed;
  }
  out.files = {{"duality_gap.csv", t.str()}};
  return out;
}

ExperimentOutput run_gamma(const ExperimentConfig& cfg) {
  const GammaSettings& s = cfg.gamma;
  const DistanceFamily fam = [&] {
    switch (s.family) {
      case FamilyKind::Constant: return DistanceFamily::constant(cfg.group, cfg.metric, cfg.solver);
      case FamilyKind::Scaling: return DistanceFamily::scaling(cfg.group, cfg.metric, cfg.solver, s.epsilon);
      case FamilyKind::Laminate: break;
    }
    return DistanceFamily::laminate(cfg.group, s.amplitude, cfg.solver, s.segments_per_period);
  }();
  const AtomicMeasure mu(s.atoms, s.box_lo, s.box_hi);
  auto measure_at = [&](int n) { return s.drift ? drift_measure(*cfg.group, mu, *s.drift, n, s.weight_rate) : mu; };
  const ConvergenceReport rep = continuous_convergence_check(fam, measure_at, mu, s.ns, cfg.threads);

  CsvTable t({"n", "quantity", "midpoint", "width"});
  t.cell(0).cell("J").cell(rep.j_limit.midpoint()).cell(rep.j_limit.width());
  t.end_row();
  for (const auto& r : rep.rows) {
    t.cell(r.n).cell("J").cell(r.j_n.midpoint()).cell(r.j_n.width());
    t.end_row();
    t.cell(r.n).cell("error").cell(r.error).cell(r.width);
    t.end_row();
  }
  if (s.grid_per_axis >= 2) {
    const auto grid = box_lattice(s.box_lo, s.box_hi, s.grid_per_axis);
    for (int n : s.ns) {
      const UniformGap u = uniform_distance_gap(fam, n, grid, cfg.threads);
      t.cell(n).cell("uniform_gap").cell(u.gap).cell(u.uncertainty);
      t.end_row();
    }
    const EquicontinuityReport eq = equicontinuity_fit(fam, s.ns, grid, cfg.threads);
    for (std::size_t i = 0; i < eq.ns.size(); ++i) {
      t.cell(eq.ns[i]).cell("equicontinuity").cell(eq.constants[i]).cell(0.0);
      t.end_row();
    }
  }
  CsvTable sum({"rate", "constant", "tolerance", "strictly_decreasing", "decreasing_within_tolerance"});
  sum.cell(rep.rate).cell(rep.constant).cell(rep.tolerance).cell(rep.strictly_decreasing());
  sum.cell(rep.decreasing_within_tolerance());
  sum.end_row();
  ExperimentOutput out;
  out.files = {{"gamma.csv", t.str()}, {"gamma_summary.csv", sum.str()}};
  if (!rep.decreasing_within_tolerance()) ++out.nonconverged;
  return out;
}

std::vector<Point> uniform_points(std::mt19937_64& rng, const Vec& lo, const Vec& hi, int count) {
  std::vector<Point> out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vec p(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) p(i) = lo(i) + u(rng) * (hi(i) - lo(i));
    out.emplace_back(p);
  }
  return out;
}

ExperimentOutput run_approx(const ExperimentConfig& cfg) {
  const ApproxSettings& s = cfg.approx;
  std::mt19937_64 rng(cfg.seed);
  const auto anchors = uniform_points(rng, s.box_lo, s.box_hi, s.anchor_count);
  const auto tests = uniform_points(rng, s.box_lo, s.box_hi, s.test_count);
  const DistanceOracle d(cfg.group, cfg.metric, cfg.solver);
  const auto f = [&](const Point& x) { return s.function(x); };
  const ConeSchemeReport rep = cone_scheme(d, f, s.lipschitz, anchors, tests, s.ns, s.anchor_counts, cfg.threads);
  CsvTable t({"n", "anchors", "point", "h", "f", "gap", "bound"});
  for (const auto& row : rep.rows) {
    const double bound = (2.0 * s.lipschitz + 1.0) * row.epsilon + 1.0 / row.n;
    for (std::size_t p = 0; p < tests.size(); ++p) {
      t.cell(row.n).cell(row.anchors).cell(p).cell(row.h[p]).cell(rep.target[p]).cell(rep.target[p] - row.h[p]);
      t.cell(bound);
      t.end_row();
    }
  }
  CsvTable sum({"covering_radius", "not_increasing", "not_below", "bound_violations", "passed"});
  sum.cell(rep.covering_radius).cell(rep.not_increasing).cell(rep.not_below).cell(rep.bound_violations);
  sum.cell(rep.passed());
  sum.end_row();
  return {{{"approx.csv", t.str()}, {"approx_summary.csv", sum.str()}}, 0, 0};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + p.string() + "'");
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Dist: return run_dist(cfg);
    case ExperimentKind::Sphere: return run_sphere(cfg);
    case ExperimentKind::Dual: return run_dual(cfg);
    case ExperimentKind::Mder: return run_mder(cfg);
    case ExperimentKind::DualityGap: return run_duality_gap(cfg);
    case ExperimentKind::Gamma: return run_gamma(cfg);
    case ExperimentKind::Approx: return run_approx(cfg);
  }
  return {};
}

fs::path output_directory(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.output_dir) return *opts.output_dir;
  if (cfg.output_dir) return *cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return fs::path(env);
  return fs::path("sublab-out");
}

int run(const fs::path& config_path, const RunOptions& opts, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  std::string config_bytes;
  try {
    config_bytes = read_file(config_path);
  } catch (const Error& e) {
    log << e.what() << '\n';
    return kConfigInvalid;
  }
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    log << "invalid config: " << e.what() << '\n';
    return kConfigInvalid;
  }
  if (opts.threads) cfg.threads = *opts.threads;

  ExperimentOutput result;
  try {
    result = run_experiment(cfg);
  } catch (const Error& e) {
    log << "experiment failed: " << e.what() << '\n';
    return e.code() == ErrorCode::NoFeasibleCurve ? kNonconvergence : kFailure;
  }
  const auto t1 = std::chrono::steady_clock::now();

  const fs::path dir = output_directory(cfg, opts);
  json manifest;
  try {
    fs::create_directories(dir);
    manifest["experiment"] = std::string(to_string(cfg.kind));
    manifest["config"] = fs::absolute(config_path).string();
    manifest["config_sha256"] = sha256_hex(config_bytes);
    manifest["seed"] = cfg.seed;
    manifest["threads"] = cfg.threads;
    manifest["versions"] = {{"sublab", SUBLAB_VERSION},
                            {"compiler", __VERSION__},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    manifest["outputs"] = json::array();
    for (const auto& f : result.files) {
      write_file(dir / f.name, f.content);
      manifest["outputs"].push_back({{"file", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}});
    }
    manifest["nonconverged"] = result.nonconverged;
    manifest["failed"] = result.failed;
    manifest["strict"] = cfg.strict;
    const auto t2 = std::chrono::steady_clock::now();
    manifest["wall_time_seconds"] = {{"compute", std::chrono::duration<double>(t1 - t0).count()},
                                     {"total", std::chrono::duration<double>(t2 - t0).count()}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "output failed: " << e.what() << '\n';
    return kIoError;
  }
  log << "wrote " << result.files.size() << " file(s) to " << dir.string() << '\n';
  if (cfg.strict && (result.nonconverged > 0 || result.failed > 0)) {
    log << "strict mode: " << result.nonconverged << " nonconverged, " << result.failed << " failed\n";
    return kNonconvergence;
  }
  return kOk;
}

int validate(const fs::path& config_path, std::ostream& log) {
  try {
    const ExperimentConfig cfg = load_config(config_path);
    log << "ok: " << to_string(cfg.kind) << " on " << cfg.group->name() << '\n';
    return kOk;
  } catch (const Error& e) {
    log << "invalid config: " << e.what() << '\n';
    return kConfigInvalid;
  }
}

void list_builtins(std::ostream& out) {
  out << "groups:";
  for (const auto& n : builtin_group_names()) out << ' ' << n;
  out << "\nmetrics:";
  for (const auto& n : metric_kind_names()) out << ' ' << n;
  out << "\nexperiments:";
  for (const auto& n : experiment_kind_names()) out << ' ' << n;
  out << "\nfamilies: constant scaling laminate\n";
}

}  // namespace sublab::app
