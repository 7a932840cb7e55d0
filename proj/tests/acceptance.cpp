// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance               run all criteria
//   acceptance --criterion N run criterion N only
//
// Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorvi/experiment.hpp"
#include "mirrorvi/metrics.hpp"
#include "mirrorvi/problems.hpp"
#include "mirrorvi/solvers.hpp"
#include "oracles.hpp"

using namespace mirrorvi;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;
  std::function<Verdict()> check;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector random_simplex_interior(Rng& rng, Index n) {
  Vector x = FeasibleSet::simplex(n).sample(rng);
  x = x.cwiseMax(1e-6);
  return x / x.sum();
}

SolverConfig make_config(const ProxGeometry& geom, std::size_t N, double m, Schedule s = Schedule::NonAdaptive) {
  SolverConfig c;
  c.N = N;
  c.m = m;
  c.schedule = s;
  c.R = default_radius(geom);
  c.x1 = benchmark_start(geom.dimension());
  return c;
}

// ---------------------------------------------------------------------------

Verdict identities() {
  Rng rng(20240601);
  double worst_tp = 0.0, worst_fy = std::numeric_limits<double>::infinity();
  const std::vector<ProxGeometry> geoms{ProxGeometry::euclidean(FeasibleSet::unit_ball(5)),
                                        ProxGeometry::euclidean(FeasibleSet::box(Vector::Constant(5, -1.0),
                                                                                 Vector::Constant(5, 2.0))),
                                        ProxGeometry::entropy(5)};
  for (const auto& g : geoms) {
    for (int i = 0; i < 10000; ++i) {
      Vector a, b, c;
      if (g.is_euclidean()) {
        a = g.set().sample(rng);
        b = g.set().sample(rng);
        c = g.set().sample(rng);
      } else {
        a = random_simplex_interior(rng, 5);
        b = random_simplex_interior(rng, 5);
        c = random_simplex_interior(rng, 5);
      }
      worst_tp = std::max(worst_tp, std::abs(three_points_residual(g, a, b, c)));
      Vector d(5), p(5);
      for (Index j = 0; j < 5; ++j) {
        d[j] = rng.normal(0.0, 3.0);
        p[j] = rng.normal();
      }
      worst_fy = std::min(worst_fy, fenchel_young_slack(g, d, p, std::exp(rng.uniform(-4.0, 4.0))));
    }
  }
  return {worst_tp <= 1e-10 && worst_fy >= -1e-12,
          "max |three-points residual| = " + fmt("%.3g", worst_tp) + ", min Fenchel-Young slack = " +
              fmt("%.3g", worst_fy)};
}

Verdict prox_oracle() {
  Rng rng(77);
  Vector lo(2), hi(2);
  lo << -1.0, -0.5;
  hi << 0.5, 1.0;
  const std::vector<ProxGeometry> geoms{ProxGeometry::euclidean(FeasibleSet::unit_ball(2)),
                                        ProxGeometry::euclidean(FeasibleSet::box(lo, hi)), ProxGeometry::entropy(2)};
  double worst = 0.0;
  for (const auto& g : geoms) {
    for (int i = 0; i < 100; ++i) {
      const double gamma = rng.uniform(0.1, 2.0);
      Vector v(2);
      v << rng.normal(0.0, 2.0), rng.normal(0.0, 2.0);
      const Vector x = g.is_euclidean() ? g.set().sample(rng) : random_simplex_interior(rng, 2);
      const Vector z = prox_step(g, x, v, gamma);
      const Vector ref = g.is_euclidean() ? oracle::grid_prox_euclidean(g.set(), x, v, gamma, 1e-3)
                                          : oracle::grid_prox_entropy(x, v, gamma, 1e-3);
      worst = std::max(worst, (z - ref).norm());
    }
  }
  return {worst <= 2e-3, "max |prox - grid argmin| = " + fmt("%.3g", worst) + " over 300 cases"};
}

Verdict theorem1_soundness() {
  const std::vector<VIInstance> instances{example1_2d(), example2_3d(1, 1, 1), hphard_generate(10, 1, Vector::Zero(10))};
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::string worst_case;
  int runs = 0;
  for (const auto& inst : instances) {
    const auto geom = ProxGeometry::euclidean(inst.set());
    for (std::size_t N : {100u, 1000u}) {
      for (double m : {-1.0, 0.0, 1.0, 5.0}) {
        const auto cfg = make_config(geom, N, m);
        const auto r = algorithm1_run(inst, geom, cfg);
        const std::vector<Vector> anchors{cfg.x1};
        const double gap = gap_sampled(r.weighted_output, inst, 10000, 42, anchors).value;
        const double rhs = theorem1_rhs(r.step_sizes, r.dual_norms, cfg.R, geom.sigma(), m, inst.delta());
        const double margin = gap - rhs;
        if (margin > worst_margin) {
          worst_margin = margin;
          worst_case = inst.name() + " N=" + std::to_string(N) + " m=" + fmt("%g", m);
        }
        ++runs;
      }
    }
  }
  return {worst_margin <= 1e-9,
          std::to_string(runs) + " runs; max(gap - bound) = " + fmt("%.3g", worst_margin) + " (" + worst_case + ")"};
}

Verdict rate_check() {
  const auto inst = hphard_generate(10, 1, Vector::Zero(10));
  const auto geom = ProxGeometry::euclidean(inst.set());
  const std::vector<std::size_t> Ns{100, 316, 1000, 3162, 10000};
  bool ok = true;
  std::ostringstream detail;
  for (double m : {0.0, 1.0, -1.0}) {
    std::vector<double> ns, gaps;
    for (std::size_t N : Ns) {
      const auto cfg = make_config(geom, N, m);
      const auto r = algorithm1_run(inst, geom, cfg);
      const std::vector<Vector> anchors{cfg.x1};
      ns.push_back(static_cast<double>(N));
      gaps.push_back(gap_sampled(r.weighted_output, inst, 10000, 42, anchors).value);
    }
    const double lo = -0.75, hi = m == -1.0 ? -0.25 : -0.35;
    double slope = std::numeric_limits<double>::quiet_NaN();
    try {
      slope = rate_slope(ns, gaps);
    } catch (const InvalidInput&) {
    }
    const bool in = slope >= lo && slope <= hi;
    ok = ok && in;
    detail << "m=" << m << " slope=" << fmt("%.3f", slope) << (in ? "" : " (outside)") << "; ";
  }
  return {ok, detail.str()};
}

Verdict figure_trend() {
  const auto inst = hphard_generate(100, 0, Vector::Zero(100));
  const auto geom = ProxGeometry::euclidean(inst.set());
  const auto cfg = make_config(geom, 1000, 50.0);
  const double alg1 = residual_metric(algorithm1_run(inst, geom, cfg).weighted_output, inst, cfg.x1);
  const double mpm = residual_metric(mpm_baseline_run(inst, geom, cfg).weighted_output, inst, cfg.x1);

  // Small-m side on the 2D example: reported, not asserted.
  const auto ex1 = example1_2d();
  const auto g1 = ProxGeometry::euclidean(ex1.set());
  const auto c1 = make_config(g1, 1000, -1.0);
  const double ex1_alg1 = residual_metric(algorithm1_run(ex1, g1, c1).weighted_output, ex1, c1.x1);
  const double ex1_mpm = residual_metric(mpm_baseline_run(ex1, g1, c1).weighted_output, ex1, c1.x1);

  return {alg1 < mpm, "HpHard n=100: alg1(m=50) residual " + fmt("%.3e", alg1) + " vs baseline " + fmt("%.3e", mpm) +
                          "; example1 m=-1: alg1 " + fmt("%.3e", ex1_alg1) + " vs baseline " + fmt("%.3e", ex1_mpm)};
}

Verdict switching_feasibility() {
  const auto inst = example1_2d();
  const auto geom = ProxGeometry::euclidean(inst.set());
  const auto g = ball_constraint_stack({0.5}, {Vector::Zero(2)});
  const double eps = 1e-2;
  bool ok = true;
  std::ostringstream detail;
  for (double m : {-1.0, 0.0, 1.0, 5.0}) {
    auto cfg = make_config(geom, 10000, m, Schedule::ConstraintSplit);
    cfg.epsilon = eps;
    const auto r = algorithm2_run(inst, g, geom, cfg);
    std::vector<std::size_t> all = r.productive_set;
    all.insert(all.end(), r.nonproductive_set.begin(), r.nonproductive_set.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want(r.iterations());
    std::iota(want.begin(), want.end(), 1);
    bool productive_feasible = true;
    for (std::size_t i : r.productive_set) productive_feasible = productive_feasible && g(r.iterates[i - 1]) <= eps;
    const double gx = g(r.weighted_output);
    const bool this_ok = !r.productive_set.empty() && gx <= eps && all == want && productive_feasible;
    ok = ok && this_ok;
    detail << "m=" << m << " |I|=" << r.productive_set.size() << " |J|=" << r.nonproductive_set.size()
           << " g(xhat)=" << fmt("%.3g", gx) << (this_ok ? "" : " FAILED") << "; ";
  }
  return {ok, detail.str()};
}

struct OfflineRule {
  double lhs = 0.0, rhs = 0.0;
  double productive_weight = 0.0, productive_norms = 0.0, nonproductive_norms = 0.0, total_weight = 0.0;
};

// Recomputes the stopping rule at step k from the iterate log alone.
OfflineRule offline_rule(const VIInstance& inst, const ConstraintStack& g, const SolverConfig& cfg, double MgD,
                         const std::vector<Vector>& iterates, std::size_t k) {
  OfflineRule o;
  double gamma_k = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    const Vector& x = iterates[i - 1];
    const double s = std::sqrt(static_cast<double>(i));
    double gamma, dn;
    if (g(x) <= cfg.epsilon) {
      gamma = std::sqrt(2.0) / (inst.bound() * s);
      dn = inst(x).norm();
      o.productive_weight += std::pow(gamma, -cfg.m);
      o.productive_norms += dn * dn * std::pow(gamma, 1.0 - cfg.m);
    } else {
      gamma = std::sqrt(2.0) / (g.lipschitz() * s);
      dn = g.subgradient(x).norm();
      o.nonproductive_norms += dn * dn * std::pow(gamma, 1.0 - cfg.m);
    }
    o.total_weight += std::pow(gamma, -cfg.m);
    gamma_k = gamma;
  }
  o.lhs = MgD * o.productive_weight;
  o.rhs = cfg.R / std::pow(gamma_k, cfg.m + 1.0) + 0.5 * (o.productive_norms + o.nonproductive_norms) +
          (MgD - cfg.epsilon) * o.total_weight;
  return o;
}

Verdict stopping_consistency() {
  struct Case {
    std::string name;
    VIInstance inst;
    ConstraintStack g;
    double epsilon;
    double m;
    Vector x1;
  };
  Vector sphere(2);
  sphere << 0.6, 0.8;
  Vector a(2);
  a << 1e-3, 0.0;
  std::vector<Case> cases;
  for (double m : {0.0, 1.0, 5.0}) {
    cases.push_back({"loose-halfspace", example1_2d(), halfspace_constraint_stack({a}, {10.0}), 1.0, m, benchmark_start(2)});
    cases.push_back({"ball eps=2", example1_2d(), ball_constraint_stack({0.5}, {Vector::Zero(2)}), 2.0, m, benchmark_start(2)});
    cases.push_back({"ball eps=0.3 sphere start", example1_2d(), ball_constraint_stack({0.5}, {Vector::Zero(2)}), 0.3, m, sphere});
    cases.push_back({"ball eps=0.01", example1_2d(), ball_constraint_stack({0.5}, {Vector::Zero(2)}), 0.01, m, benchmark_start(2)});
  }
  int terminated = 0;
  double worst_rel = 0.0;
  bool ok = true;
  std::ostringstream failures;
  for (const auto& c : cases) {
    const auto geom = ProxGeometry::euclidean(c.inst.set());
    auto cfg = make_config(geom, 10000, c.m, Schedule::ConstraintSplit);
    cfg.epsilon = c.epsilon;
    cfg.x1 = c.x1;
    const auto r = algorithm2_run(c.inst, c.g, geom, cfg);
    if (r.stop_reason != StopReason::StoppingRuleMet) continue;
    ++terminated;
    const double MgD = c.g.lipschitz() * geom.set().diameter();
    const std::size_t k = r.iterations();
    const auto off = offline_rule(c.inst, c.g, cfg, MgD, r.iterates, k);
    const auto& s = *r.stopping_sums;
    const double scale = std::exp(s.log_scale);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    const double e = std::max({rel(s.productive_weight * scale, off.productive_weight),
                               rel(s.productive_norms * scale, off.productive_norms),
                               rel(s.total_weight * scale, off.total_weight),
                               off.nonproductive_norms == 0.0 ? std::abs(s.nonproductive_norms)
                                                              : rel(s.nonproductive_norms * scale, off.nonproductive_norms)});
    worst_rel = std::max(worst_rel, e);
    const bool met_offline = off.lhs >= off.rhs;
    const bool first = k == 1 || [&] {
      const auto prev = offline_rule(c.inst, c.g, cfg, MgD, r.iterates, k - 1);
      return prev.lhs < prev.rhs;
    }();
    if (!(met_offline && first && e <= 1e-10)) {
      ok = false;
      failures << c.name << " m=" << c.m << " (met=" << met_offline << " first=" << first << " rel=" << e << ") ";
    }
  }
  ok = ok && terminated > 0;
  return {ok, std::to_string(terminated) + "/" + std::to_string(cases.size()) +
                  " runs stopped by the rule; max relative sum mismatch = " + fmt("%.3g", worst_rel) +
                  (failures.str().empty() ? "" : "; failures: " + failures.str())};
}

Verdict known_solution() {
  const auto inst = hphard_generate(10, 1, Vector::Zero(10));
  const auto geom = ProxGeometry::euclidean(inst.set());
  const double d100 = algorithm1_run(inst, geom, make_config(geom, 100, 1.0)).weighted_output.norm();
  const double d10k = algorithm1_run(inst, geom, make_config(geom, 10000, 1.0)).weighted_output.norm();
  return {d10k <= 0.2 * d100, "|xhat_100| = " + fmt("%.3e", d100) + ", |xhat_10000| = " + fmt("%.3e", d10k) +
                                  ", ratio = " + fmt("%.3g", d10k / d100)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "mirrorvi_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "problem.json") << to_json(generate_hphard(6, 3, Vector::Constant(6, 0.1))).dump();
  }
  const std::string solvers =
      "[solver:a1]\ntype = algorithm1\nm = 1\n"
      "[solver:a1_adaptive]\ntype = algorithm1\nm = 5\nschedule = adaptive\n"
      "[solver:a2]\ntype = algorithm2\nm = 0\nepsilon = 0.01\nconstraint = ball\nradii = 0.5\n"
      "[solver:mpm]\ntype = mpm\n";
  const std::vector<std::string> headers{
      "problem = example1\nN = 2000\n",
      "problem = example2\nr = 1\ns = 1\nt = 1\nN = 2000\n",
      "problem = hphard\nn = 100\nseed = 7\nq = random\nN = 500\ngap_samples = 200\n",
      "problem = custom\nproblem_file = " + (root / "problem.json").string() + "\nN = 1000\n"};
  int files = 0;
  std::string mismatch;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    std::istringstream in("[experiment]\n" + headers[i] + solvers);
    auto spec = parse_spec(in, "acceptance");
    for (const char* run : {"a", "b"}) {
      spec.output_dir = (root / (std::to_string(i) + run)).string();
      run_experiment(spec);
    }
    for (const auto& e : fs::directory_iterator(root / (std::to_string(i) + "a"))) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const fs::path twin = root / (std::to_string(i) + "b") / e.path().filename();
      if (slurp(e.path()) != slurp(twin)) mismatch += e.path().filename().string() + " ";
    }
  }
  fs::remove_all(root);
  return {mismatch.empty() && files == 16,
          std::to_string(files) + " CSV pairs compared" + (mismatch.empty() ? ", all identical" : "; differ: " + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "Bregman identity suite", 5, identities},
      {2, "prox-step matches dense-grid argmin", 30, prox_oracle},
      {3, "weighted-average bound holds on sampled gap", 120, theorem1_soundness},
      {4, "gap decay rate on HpHard n=10", 180, rate_check},
      {5, "algorithm1 m=50 beats extragradient baseline on HpHard n=100", 60, figure_trend},
      {6, "switching method feasibility and index partition", 30, switching_feasibility},
      {7, "stopping rule matches offline recomputation", 30, stopping_consistency},
      {8, "convergence to the known solution", 60, known_solution},
      {9, "byte-identical CSVs across invocations", 60, determinism},
  };

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("[%s] criterion %d: %s -- %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                v.detail.c_str(), secs, c.time_limit_s, in_time ? "" : " TIMEOUT");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
