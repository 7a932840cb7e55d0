#pragma once

// Experiment orchestration behind the `mirrorvi` command line tool: spec
// parsing and fail-fast validation, solver runs, per-solver CSV streams, the
// run manifest, and the summary table.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "mirrorvi/errors.hpp"
#include "mirrorvi/geometry.hpp"
#include "mirrorvi/metrics.hpp"
#include "mirrorvi/problems.hpp"
#include "mirrorvi/solvers.hpp"

namespace mirrorvi {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "k,branch,gamma,residual,gap_sampled,bound_rhs";
// Above this budget only every ceil(N / kMaxRows)-th iteration is written.
inline constexpr std::size_t kMaxRows = 10000;

enum class ProblemKind { Example1, Example2, HpHard, Custom };
enum class SolverKind { Algorithm1, Algorithm2, Mpm };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Example1;
  double r = 1.0, s = 1.0, t = 1.0;  // Example2
  Index n = 100;                     // HpHard
  std::uint64_t seed = 0;            // HpHard
  bool random_q = false;             // HpHard
  std::string path;                  // Custom problem file
};

struct ConstraintSpec {
  std::string kind;  // "ball" | "halfspace"
  std::vector<double> radii;
  std::vector<Vector> centers;
  std::vector<Vector> normals;
  std::vector<double> offsets;
};

struct SolverEntry {
  std::string name;
  SolverKind kind = SolverKind::Algorithm1;
  double m = 0.0;
  Schedule schedule = Schedule::NonAdaptive;
  double epsilon = 1e-2;
  std::optional<double> R;
  std::optional<ConstraintSpec> constraint;
};

struct ExperimentSpec {
  ProblemSpec problem;
  std::vector<SolverEntry> solvers;
  std::size_t N = 1000;
  std::string geometry = "euclidean";
  std::string output_dir = "runs/out";
  std::size_t gap_samples = 1000;
  std::uint64_t gap_seed = 0;
  std::string source;  // spec file path, echoed into the manifest
};

/// Spec rejected before any output is written; carries every problem found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> errors)
      : Error(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

  nlohmann::json report() const { return {{"status", "invalid"}, {"errors", errors_}}; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string out = "invalid experiment spec";
    for (const auto& s : e) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> errors_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (trim(s.substr(used)).size() != 0) throw std::invalid_argument("trailing characters");
  return v;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    if (!tok.empty()) out.push_back(parse_double(tok));
  }
  return out;
}

// "1,0 | 0,1" -> two vectors
inline std::vector<Vector> parse_vectors(const std::string& s) {
  std::vector<Vector> out;
  for (const auto& part : split(s, '|')) {
    const auto vals = parse_list(part);
    out.push_back(Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size())));
  }
  return out;
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

/// %.17g: round-trips every double and is locale independent.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects typed lookups against one INI section, recording failures instead of throwing.
class SectionReader {
 public:
  SectionReader(const boost::property_tree::ptree& tree, std::string where, std::vector<std::string>& errors)
      : tree_(tree), where_(std::move(where)), errors_(errors) {}

  std::optional<std::string> str(const std::string& key) {
    seen_.push_back(key);
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  }

  template <class T>
  std::optional<T> number(const std::string& key) {
    auto s = str(key);
    if (!s) return std::nullopt;
    try {
      const double v = parse_double(*s);
      if constexpr (std::is_integral_v<T>) {
        if (v < 0 || v != std::floor(v)) throw std::invalid_argument("not a non-negative integer");
      }
      return static_cast<T>(v);
    } catch (const std::exception&) {
      errors_.push_back(where_ + "." + key + ": cannot parse '" + *s + "'");
      return std::nullopt;
    }
  }

  void reject_unknown() {
    for (const auto& [key, _] : tree_) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        errors_.push_back(where_ + ": unknown key '" + key + "'");
      }
    }
  }

  void error(const std::string& msg) { errors_.push_back(where_ + ": " + msg); }

 private:
  const boost::property_tree::ptree& tree_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

}  // namespace detail

/// Parses an INI experiment spec:
///
///   [experiment]
///   problem = hphard        ; example1 | example2 | hphard | custom
///   n = 100                 ; hphard
///   seed = 0                ; hphard
///   q = zero                ; hphard: zero | random
///   r = 1                   ; example2 (also s, t)
///   problem_file = p.json   ; custom
///   N = 1000
///   geometry = euclidean
///   output_dir = runs/hphard
///   gap_samples = 1000
///   gap_seed = 0
///
///   [solver:alg1_m1]
///   type = algorithm1       ; algorithm1 | algorithm2 | mpm
///   m = 1
///   schedule = nonadaptive  ; nonadaptive | adaptive (algorithm1)
///   epsilon = 0.01          ; algorithm2
///   R = 2                   ; optional, defaults per geometry
///   constraint = ball       ; algorithm2: ball | halfspace
///   radii = 0.5             ; ball, comma separated
///   centers = 0,0           ; ball, vectors separated by '|'
///   normals = 1,0 | 0,1     ; halfspace
///   offsets = 0.5, 0.5      ; halfspace
///
/// Throws ValidationError listing every problem found.
inline ExperimentSpec parse_spec(std::istream& in, const std::string& source = "<stream>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError({std::string("malformed spec file: ") + e.what()});
  }

  std::vector<std::string> errors;
  ExperimentSpec spec;
  spec.source = source;

  const auto exp_node = tree.get_child_optional("experiment");
  if (!exp_node) {
    errors.push_back("missing [experiment] section");
  } else {
    detail::SectionReader rd(*exp_node, "experiment", errors);
    const auto problem = rd.str("problem").value_or("example1");
    if (problem == "example1") {
      spec.problem.kind = ProblemKind::Example1;
    } else if (problem == "example2") {
      spec.problem.kind = ProblemKind::Example2;
    } else if (problem == "hphard") {
      spec.problem.kind = ProblemKind::HpHard;
    } else if (problem == "custom") {
      spec.problem.kind = ProblemKind::Custom;
    } else {
      rd.error("unknown problem '" + problem + "'");
    }
    if (auto v = rd.number<double>("r")) spec.problem.r = *v;
    if (auto v = rd.number<double>("s")) spec.problem.s = *v;
    if (auto v = rd.number<double>("t")) spec.problem.t = *v;
    if (auto v = rd.number<Index>("n")) spec.problem.n = *v;
    if (auto v = rd.number<std::uint64_t>("seed")) spec.problem.seed = *v;
    if (auto v = rd.str("q")) {
      if (*v == "zero") spec.problem.random_q = false;
      else if (*v == "random") spec.problem.random_q = true;
      else rd.error("q must be 'zero' or 'random'");
    }
    if (auto v = rd.str("problem_file")) spec.problem.path = *v;
    if (auto v = rd.number<std::size_t>("N")) {
      spec.N = *v;
      if (spec.N < 1) rd.error("N must be >= 1");
    }
    if (auto v = rd.str("geometry")) spec.geometry = *v;
    if (auto v = rd.str("output_dir")) spec.output_dir = *v;
    if (auto v = rd.number<std::size_t>("gap_samples")) spec.gap_samples = *v;
    if (auto v = rd.number<std::uint64_t>("gap_seed")) spec.gap_seed = *v;
    rd.reject_unknown();
  }

  for (const auto& [section, node] : tree) {
    if (section == "experiment") continue;
    if (section.rfind("solver:", 0) != 0) {
      errors.push_back("unknown section [" + section + "]");
      continue;
    }
    SolverEntry entry;
    entry.name = section.substr(7);
    const std::string where = "solver:" + entry.name;
    detail::SectionReader rd(node, where, errors);
    if (!detail::valid_name(entry.name)) rd.error("solver names use [A-Za-z0-9_-] only");
    const auto type = rd.str("type").value_or("");
    if (type == "algorithm1") entry.kind = SolverKind::Algorithm1;
    else if (type == "algorithm2") entry.kind = SolverKind::Algorithm2;
    else if (type == "mpm") entry.kind = SolverKind::Mpm;
    else rd.error("type must be algorithm1, algorithm2 or mpm");
    if (auto v = rd.number<double>("m")) entry.m = *v;
    if (auto v = rd.number<double>("epsilon")) entry.epsilon = *v;
    if (auto v = rd.number<double>("R")) entry.R = *v;
    const auto schedule = rd.str("schedule");
    if (entry.kind == SolverKind::Algorithm2) {
      entry.schedule = Schedule::ConstraintSplit;
      if (schedule && *schedule != "constraint_split") rd.error("algorithm2 uses schedule constraint_split");
    } else if (schedule) {
      if (*schedule == "nonadaptive") entry.schedule = Schedule::NonAdaptive;
      else if (*schedule == "adaptive") entry.schedule = Schedule::Adaptive;
      else rd.error("schedule must be nonadaptive or adaptive");
    }
    const auto ckind = rd.str("constraint");
    const auto radii = rd.str("radii");
    const auto centers = rd.str("centers");
    const auto normals = rd.str("normals");
    const auto offsets = rd.str("offsets");
    if (entry.kind == SolverKind::Algorithm2) {
      ConstraintSpec c;
      c.kind = ckind.value_or("");
      try {
        if (c.kind == "ball") {
          c.radii = detail::parse_list(radii.value_or(""));
          if (centers) c.centers = detail::parse_vectors(*centers);
        } else if (c.kind == "halfspace") {
          c.normals = detail::parse_vectors(normals.value_or(""));
          c.offsets = detail::parse_list(offsets.value_or(""));
        } else {
          rd.error("algorithm2 needs constraint = ball or halfspace");
        }
      } catch (const std::exception&) {
        rd.error("cannot parse constraint lists");
      }
      entry.constraint = std::move(c);
    } else if (ckind) {
      rd.error("only algorithm2 takes a constraint");
    }
    rd.reject_unknown();
    for (const auto& other : spec.solvers) {
      if (other.name == entry.name) rd.error("duplicate solver name");
    }
    spec.solvers.push_back(std::move(entry));
  }
  if (spec.solvers.empty()) errors.push_back("no [solver:<name>] sections");
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open spec file '" + path + "'"});
  return parse_spec(in, path);
}

/// Spec turned into runnable objects. Construction validates everything.
struct ResolvedSolver {
  SolverEntry entry;
  SolverConfig config;
  std::optional<ConstraintStack> constraints;
};

struct ResolvedExperiment {
  ExperimentSpec spec;
  VIInstance instance;
  ProxGeometry geometry;
  Vector x1;
  std::vector<ResolvedSolver> solvers;
  nlohmann::json problem_meta;
};

namespace detail {

inline Vector hphard_q(Index n, std::uint64_t seed, bool random) {
  if (!random) return Vector::Zero(n);
  // Separate stream so the K draws are unchanged by the q mode.
  Rng rng(seed + 1);
  Vector q(n);
  for (Index i = 0; i < n; ++i) q[i] = rng.uniform(-1.0, 1.0);
  return q;
}

inline std::pair<VIInstance, nlohmann::json> build_problem(const ProblemSpec& p) {
  switch (p.kind) {
    case ProblemKind::Example1:
      return {example1_2d(), {{"problem", "example1"}}};
    case ProblemKind::Example2:
      return {example2_3d(p.r, p.s, p.t), {{"problem", "example2"}, {"r", p.r}, {"s", p.s}, {"t", p.t}}};
    case ProblemKind::HpHard: {
      const auto hp = generate_hphard(p.n, p.seed, hphard_q(p.n, p.seed, p.random_q));
      return {hp.instance(),
              {{"problem", "hphard"}, {"n", p.n}, {"seed", p.seed}, {"q", p.random_q ? "random" : "zero"},
               {"rng", "mt19937_64"}, {"rng_stream_version", Rng::kStreamVersion}}};
    }
    case ProblemKind::Custom: {
      std::ifstream in(p.path);
      if (!in) throw InvalidInput("cannot open problem file '" + p.path + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("problem file is not JSON: ") + e.what());
      }
      const auto hp = hphard_from_json(j);
      return {hp.instance(), {{"problem", "custom"}, {"problem_file", p.path}, {"n", hp.n}, {"seed", hp.seed}}};
    }
  }
  throw InvalidInput("unknown problem kind");
}

inline ConstraintStack build_constraints(const ConstraintSpec& c, Index n) {
  if (c.kind == "ball") {
    std::vector<Vector> centers = c.centers;
    if (centers.empty()) centers.assign(c.radii.size(), Vector::Zero(n));
    for (const auto& v : centers) detail::require_dim(v, n, "constraint center");
    return ball_constraint_stack(c.radii, centers);
  }
  for (const auto& v : c.normals) detail::require_dim(v, n, "constraint normal");
  return halfspace_constraint_stack(c.normals, c.offsets);
}

}  // namespace detail

/// Builds the instance, the geometry, and every SolverConfig; any failure is
/// reported before a single run starts.
inline ResolvedExperiment resolve(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  std::optional<std::pair<VIInstance, nlohmann::json>> problem;
  try {
    problem = detail::build_problem(spec.problem);
  } catch (const Error& e) {
    errors.push_back(std::string("problem: ") + e.what());
  }
  if (spec.geometry != "euclidean") {
    errors.push_back("experiment.geometry: '" + spec.geometry + "' unsupported; shipped problems live on Euclidean balls");
  }
  if (!problem || !errors.empty()) throw ValidationError(std::move(errors));

  const VIInstance& inst = problem->first;
  const ProxGeometry geom = ProxGeometry::euclidean(inst.set());
  const Vector x1 = benchmark_start(inst.dimension());
  std::vector<ResolvedSolver> solvers;
  for (const auto& e : spec.solvers) {
    ResolvedSolver rs{e, {}, std::nullopt};
    rs.config.m = e.m;
    rs.config.N = spec.N;
    rs.config.epsilon = e.epsilon;
    rs.config.R = e.R.value_or(default_radius(geom));
    rs.config.schedule = e.schedule;
    rs.config.x1 = x1;
    try {
      validate(rs.config, geom);
      if (e.constraint) rs.constraints = detail::build_constraints(*e.constraint, inst.dimension());
    } catch (const Error& err) {
      errors.push_back("solver:" + e.name + ": " + err.what());
    }
    solvers.push_back(std::move(rs));
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return ResolvedExperiment{spec, inst, geom, x1, std::move(solvers), problem->second};
}

// ---------------------------------------------------------------------------

/// Iterations that get a sampled gap: ceil(10^(j/4)) for j = 0, 1, ... and N.
inline std::vector<std::size_t> gap_checkpoints(std::size_t N) {
  std::vector<std::size_t> out;
  for (int j = 0;; ++j) {
    const auto k = static_cast<std::size_t>(std::ceil(std::pow(10.0, j / 4.0) - 1e-9));
    if (k > N) break;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  if (out.empty() || out.back() != N) out.push_back(N);
  return out;
}

struct SolverOutcome {
  std::string name;
  std::string type;
  bool ok = false;
  std::string error;
  std::optional<RunResult> result;
  std::string csv_file;
};

struct ExperimentOutcome {
  std::vector<SolverOutcome> solvers;
  std::filesystem::path output_dir;
  bool all_ok() const {
    return std::all_of(solvers.begin(), solvers.end(), [](const auto& s) { return s.ok; });
  }
};

namespace detail {

inline const char* type_name(SolverKind k) {
  switch (k) {
    case SolverKind::Algorithm1: return "algorithm1";
    case SolverKind::Algorithm2: return "algorithm2";
    case SolverKind::Mpm: return "mpm";
  }
  return "?";
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// Runs one solver and streams its CSV rows.
inline SolverOutcome run_one(const ResolvedExperiment& ex, const ResolvedSolver& rs, std::ostream& csv) {
  SolverOutcome out;
  out.name = rs.entry.name;
  out.type = type_name(rs.entry.kind);
  const auto& inst = ex.instance;
  const std::size_t N = rs.config.N;
  const std::size_t stride = N <= kMaxRows ? 1 : (N + kMaxRows - 1) / kMaxRows;
  const auto checkpoints = gap_checkpoints(N);
  const bool residual_defined = inst(ex.x1).squaredNorm() > 0.0;
  const bool has_bound = rs.entry.kind == SolverKind::Algorithm1 && rs.config.schedule == Schedule::NonAdaptive;
  Theorem1Bound bound(rs.config.R, ex.geometry.sigma(), rs.config.m, inst.delta());
  const std::vector<Vector> anchors{ex.x1};

  csv << kCsvHeader << '\n';
  auto observer = [&](const IterationView& v) {
    if (has_bound) bound.add(v.gamma, v.dual_norm);
    const bool at_checkpoint = std::binary_search(checkpoints.begin(), checkpoints.end(), v.k);
    if (!(v.k % stride == 0 || v.k == N || at_checkpoint)) return;
    csv << v.k << ',' << to_string(v.branch) << ',' << fmt_double(v.gamma) << ',';
    const bool have_output = v.output.size() > 0;
    if (have_output && residual_defined) csv << fmt_double(residual_metric(v.output, inst, ex.x1));
    csv << ',';
    if (have_output && at_checkpoint) {
      csv << fmt_double(gap_sampled(v.output, inst, ex.spec.gap_samples, ex.spec.gap_seed, anchors).value);
    }
    csv << ',';
    if (has_bound) csv << fmt_double(bound.value());
    csv << '\n';
  };

  try {
    switch (rs.entry.kind) {
      case SolverKind::Algorithm1:
        out.result = algorithm1_run(inst, ex.geometry, rs.config, observer);
        break;
      case SolverKind::Algorithm2:
        out.result = algorithm2_run(inst, *rs.constraints, ex.geometry, rs.config, observer);
        break;
      case SolverKind::Mpm:
        out.result = mpm_baseline_run(inst, ex.geometry, rs.config, observer);
        break;
    }
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Validates the whole spec, then runs each solver in order from the shared
/// x^1 = (1/sqrt n, ...), writing <output_dir>/<name>.csv per solver and
/// manifest.json once all runs finish. Solver failures are recorded and do
/// not stop the remaining solvers. Nothing is written if validation fails.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = detail::utc_now();
  const ResolvedExperiment ex = resolve(spec);

  ExperimentOutcome outcome;
  outcome.output_dir = spec.output_dir;
  std::filesystem::create_directories(outcome.output_dir);

  for (const auto& rs : ex.solvers) {
    const std::string file = rs.entry.name + ".csv";
    std::ofstream csv(outcome.output_dir / file, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot write " + (outcome.output_dir / file).string());
    auto so = detail::run_one(ex, rs, csv);
    so.csv_file = file;
    outcome.solvers.push_back(std::move(so));
  }

  nlohmann::json manifest;
  manifest["csv_schema_version"] = kCsvSchemaVersion;
  manifest["csv_columns"] = kCsvHeader;
  manifest["library_version"] = kLibraryVersion;
  manifest["spec_file"] = spec.source;
  manifest["problem"] = ex.problem_meta;
  manifest["problem"]["dimension"] = ex.instance.dimension();
  manifest["problem"]["L_F"] = ex.instance.bound();
  manifest["problem"]["delta"] = ex.instance.delta();
  manifest["N"] = spec.N;
  manifest["geometry"] = {{"norm", "euclidean"}, {"psi", "half_squared_euclidean"}, {"sigma", ex.geometry.sigma()},
                          {"set", "unit_ball"}, {"diameter", ex.geometry.set().diameter()}};
  manifest["x1"] = detail::vec_json(ex.x1);
  manifest["gap_samples"] = spec.gap_samples;
  manifest["gap_seed"] = spec.gap_seed;
  manifest["gap_checkpoints"] = gap_checkpoints(spec.N);
  manifest["solvers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ex.solvers.size(); ++i) {
    const auto& rs = ex.solvers[i];
    const auto& so = outcome.solvers[i];
    nlohmann::json s{{"name", rs.entry.name},
                     {"type", so.type},
                     {"csv", so.csv_file},
                     {"m", rs.config.m},
                     {"schedule", to_string(rs.config.schedule)},
                     {"R", rs.config.R},
                     {"status", so.ok ? "ok" : "failed"}};
    if (rs.entry.kind == SolverKind::Algorithm2) {
      s["epsilon"] = rs.config.epsilon;
      s["constraint"] = rs.entry.constraint->kind;
      s["M_g"] = rs.constraints->lipschitz();
    }
    if (rs.entry.kind == SolverKind::Mpm) s["lambda"] = 1.0 / (std::sqrt(2.0) * ex.instance.bound());
    if (!so.ok) s["error"] = so.error;
    if (so.result) {
      const auto& r = *so.result;
      s["iterations"] = r.iterations();
      s["stop_reason"] = to_string(r.stop_reason);
      s["theorem_hypotheses_met"] = r.theorem_hypotheses_met;
      if (rs.entry.kind == SolverKind::Algorithm2) {
        s["productive"] = r.productive_set.size();
        s["nonproductive"] = r.nonproductive_set.size();
      }
    }
    manifest["solvers"].push_back(std::move(s));
  }
  manifest["started_at"] = started_at;
  manifest["finished_at"] = detail::utc_now();
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ofstream mf(outcome.output_dir / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << '\n';
  return outcome;
}

// ---------------------------------------------------------------------------
// Summary.

struct SolverSummary {
  std::string name;
  std::string type;
  std::string status;          // "ok" or "failed: <reason>"
  std::string final_residual;  // number, "rejected_input" or empty
  std::string final_gap;
  std::string rate_slope;
  std::string stop_reason;
  std::string productive;
  std::string nonproductive;
};

namespace detail {

struct CsvRow {
  std::size_t k;
  std::string residual;
  std::string gap;
};

inline std::vector<CsvRow> read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != kCsvHeader) throw InvalidInput(file.string() + ": unexpected CSV header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 6) cells.emplace_back();
    rows.push_back({static_cast<std::size_t>(std::stoull(cells[0])), cells[3], cells[4]});
  }
  return rows;
}

}  // namespace detail

/// Builds per-solver summaries from a finished run directory.
inline std::vector<SolverSummary> summarize_run_dir(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw InvalidInput("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("manifest.json: ") + e.what());
  }
  std::vector<SolverSummary> out;
  for (const auto& s : manifest.at("solvers")) {
    SolverSummary sum;
    sum.name = s.at("name").get<std::string>();
    sum.type = s.at("type").get<std::string>();
    sum.status = s.at("status").get<std::string>();
    if (s.contains("error")) sum.status += ": " + s.at("error").get<std::string>();
    if (s.contains("stop_reason")) sum.stop_reason = s.at("stop_reason").get<std::string>();
    if (s.contains("productive")) sum.productive = std::to_string(s.at("productive").get<std::size_t>());
    if (s.contains("nonproductive")) sum.nonproductive = std::to_string(s.at("nonproductive").get<std::size_t>());
    const auto rows = detail::read_csv(dir / s.at("csv").get<std::string>());
    if (!rows.empty()) {
      sum.final_residual = rows.back().residual.empty() ? "rejected_input" : rows.back().residual;
      sum.final_gap = rows.back().gap;
      std::vector<double> ks, gaps;
      for (const auto& r : rows) {
        if (r.gap.empty()) continue;
        const double g = std::stod(r.gap);
        if (g > 0.0) {
          ks.push_back(static_cast<double>(r.k));
          gaps.push_back(g);
        }
      }
      if (ks.size() >= 4) sum.rate_slope = detail::fmt_double(rate_slope(ks, gaps));
    }
    out.push_back(std::move(sum));
  }
  return out;
}

/// Prints an aligned table and writes the same rows to `csv_path` (if non-empty).
inline void emit_summary(const std::vector<SolverSummary>& rows, std::ostream& out,
                         const std::filesystem::path& csv_path = {}) {
  const std::vector<std::string> header{"solver", "type", "status", "final_residual", "final_gap",
                                        "rate_slope", "stop_reason", "productive", "nonproductive"};
  auto cells = [](const SolverSummary& s) {
    return std::vector<std::string>{s.name, s.type, s.status, s.final_residual, s.final_gap,
                                    s.rate_slope, s.stop_reason, s.productive, s.nonproductive};
  };
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows) {
    const auto c = cells(r);
    for (std::size_t i = 0; i < c.size(); ++i) width[i] = std::max(width[i], c[i].size());
  }
  auto print = [&](const std::vector<std::string>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      out << std::left << std::setw(static_cast<int>(width[i])) << c[i] << (i + 1 < c.size() ? "  " : "\n");
    }
  };
  print(header);
  for (const auto& r : rows) print(cells(r));

  if (csv_path.empty()) return;
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < header.size(); ++i) csv << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& r : rows) {
    const auto c = cells(r);
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::string v = c[i];
      std::replace(v.begin(), v.end(), ',', ';');
      std::replace(v.begin(), v.end(), '\n', ' ');
      csv << v << (i + 1 < c.size() ? "," : "\n");
    }
  }
}

}  // namespace mirrorvi
