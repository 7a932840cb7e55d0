#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mirrorvi/errors.hpp"
#include "mirrorvi/geometry.hpp"
#include "mirrorvi/problems.hpp"

namespace mirrorvi {

enum class Schedule { NonAdaptive, Adaptive, ConstraintSplit };
enum class StopReason { BudgetExhausted, StoppingRuleMet, ZeroOperatorValue };
enum class Branch { Unconstrained, Productive, NonProductive };

inline const char* to_string(Schedule s) {
  switch (s) {
    case Schedule::NonAdaptive: return "nonadaptive";
    case Schedule::Adaptive: return "adaptive";
    case Schedule::ConstraintSplit: return "constraint_split";
  }
  return "?";
}

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::BudgetExhausted: return "budget_exhausted";
    case StopReason::StoppingRuleMet: return "stopping_rule_met";
    case StopReason::ZeroOperatorValue: return "zero_operator_value";
  }
  return "?";
}

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Unconstrained: return "unconstrained";
    case Branch::Productive: return "productive";
    case Branch::NonProductive: return "nonproductive";
  }
  return "?";
}

// ||F(x^k)||_* at or below this value halts the adaptive schedule.
inline constexpr double kZeroOperatorFloor = 1e-12;
// Runs longer than this keep only streaming sums, not the iterate log.
inline constexpr std::size_t kFullLogLimit = 10000;

struct SolverConfig {
  double m = 0.0;        // weighting exponent, >= -1
  std::size_t N = 1000;  // iteration budget
  double epsilon = 1e-2;
  double R = 2.0;  // bound on V(x, y) over Q x Q
  Schedule schedule = Schedule::NonAdaptive;
  Vector x1;
};

/// R for the prox-structure: max of V over Q x Q where finite.
///   Euclidean ball of radius r: 2 r^2.  Box: D^2 / 2.
///   Entropy on the simplex: V is unbounded near the boundary, so this is a
///   convention (ln n + 1) that only holds on an interior subset.
inline double default_radius(const ProxGeometry& geom) {
  const auto& set = geom.set();
  if (geom.is_euclidean()) {
    if (const auto* b = std::get_if<Ball>(&set.kind())) return 2.0 * b->radius * b->radius;
    const double d = set.diameter();
    return 0.5 * d * d;
  }
  return std::log(static_cast<double>(set.dimension())) + 1.0;
}

/// x^1 = (1/sqrt n, ..., 1/sqrt n), the shared starting point of the benchmarks.
inline Vector benchmark_start(Index n) { return Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))); }

inline void validate(const SolverConfig& cfg, const ProxGeometry& geom) {
  if (!(cfg.m >= -1.0) || !std::isfinite(cfg.m)) throw InvalidInput("weighting exponent m must be >= -1");
  if (cfg.N < 1) throw InvalidInput("iteration budget N must be >= 1");
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) throw InvalidInput("epsilon must be positive");
  if (!(cfg.R > 0.0) || !std::isfinite(cfg.R)) throw InvalidInput("R must be positive");
  if (cfg.x1.size() != geom.dimension()) throw InvalidInput("initial point has the wrong dimension");
  if (!geom.set().contains(cfg.x1)) throw InvalidInput("initial point lies outside the feasible set");
}

// ---------------------------------------------------------------------------
// Step sizes.

/// sqrt(2 sigma) / (L sqrt k).
inline double step_nonadaptive(std::size_t k, double sigma, double lipschitz) {
  if (k < 1 || !(sigma > 0.0) || !(lipschitz > 0.0)) throw InvalidInput("step rule needs k >= 1, sigma > 0, L > 0");
  return std::sqrt(2.0 * sigma) / (lipschitz * std::sqrt(static_cast<double>(k)));
}

/// sqrt(2 sigma) / (||F(x^k)||_* sqrt k). Not monotone in k in general.
inline double step_adaptive(std::size_t k, double sigma, double operator_dual_norm) {
  if (k < 1 || !(sigma > 0.0)) throw InvalidInput("step rule needs k >= 1, sigma > 0");
  if (!(operator_dual_norm > kZeroOperatorFloor)) throw ZeroOperatorValue("operator value vanished; current point solves the VI");
  return std::sqrt(2.0 * sigma) / (operator_dual_norm * std::sqrt(static_cast<double>(k)));
}

// ---------------------------------------------------------------------------
// Weighting: x_hat = sum gamma_k^-m x^k / sum gamma_k^-m.

/// Batch form; weights are normalized by the largest one (log domain).
inline Vector weighted_average(std::span<const Vector> points, std::span<const double> gammas, double m) {
  if (points.empty() || points.size() != gammas.size()) throw InvalidInput("weighted average needs equal, non-empty lists");
  std::vector<double> logw(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw InvalidInput("weights need positive step sizes");
    logw[i] = -m * std::log(gammas[i]);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  Vector acc = Vector::Zero(points[0].size());
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != acc.size()) throw InvalidInput("weighted average points differ in dimension");
    const double w = std::exp(logw[i] - top);
    acc += w * points[i];
    total += w;
  }
  return acc / total;
}

/// Streaming form of weighted_average. The running sums are kept relative
/// to the largest weight seen so far and rescaled when it grows.
class WeightedAverager {
 public:
  WeightedAverager(Index n, double m) : m_(m), sum_(Vector::Zero(n)) {}

  void add(const Vector& x, double gamma) {
    const double lw = -m_ * std::log(gamma);
    if (lw > log_scale_) {
      const double shrink = std::exp(log_scale_ - lw);
      sum_ *= shrink;
      weight_ *= shrink;
      log_scale_ = lw;
    }
    const double w = std::exp(lw - log_scale_);
    sum_ += w * x;
    weight_ += w;
    ++count_;
  }

  bool empty() const { return count_ == 0; }
  std::size_t count() const { return count_; }
  Vector mean() const { return sum_ / weight_; }
  /// ln of sum gamma_k^-m.
  double log_total_weight() const { return log_scale_ + std::log(weight_); }

 private:
  double m_;
  double log_scale_ = -std::numeric_limits<double>::infinity();
  Vector sum_;
  double weight_ = 0.0;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Stopping rule of the switching method, with O(1) updates:
//
//   LHS = M_g D sum_{I} (g^F_i)^-m
//   RHS = R / g_k^(m+1) + (1/2 sigma) sum_{I} ||F(x^i)||_*^2 (g^F_i)^(1-m)
//                       + (1/2 sigma) sum_{J} ||grad g(x^j)||_*^2 (g^g_j)^(1-m)
//                       + (M_g D - eps) sum_{i<=k} g_i^-m
//
// All sums share one scale factor exp(-log_scale) so large m cannot overflow.

class StoppingRule {
 public:
  struct Sums {
    double productive_weight = 0.0;      // sum_I (g^F)^-m
    double productive_norms = 0.0;       // sum_I ||F||^2 (g^F)^(1-m)
    double nonproductive_norms = 0.0;    // sum_J ||grad g||^2 (g^g)^(1-m)
    double total_weight = 0.0;           // sum_{i<=k} g_i^-m
    double log_scale = -std::numeric_limits<double>::infinity();
  };

  struct Sides {
    double lhs;
    double rhs;
    double log_scale;  // true values are lhs * e^log_scale, rhs * e^log_scale
    bool met() const { return lhs >= rhs; }
  };

  StoppingRule(double m, double sigma, double R, double Mg, double diameter, double epsilon)
      : m_(m), sigma_(sigma), R_(R), MgD_(Mg * diameter), epsilon_(epsilon) {}

  void add_productive(double gamma, double dual_norm) {
    const double lg = std::log(gamma);
    const double lw = -m_ * lg;
    const double ln = dual_norm > 0.0 ? 2.0 * std::log(dual_norm) + (1.0 - m_) * lg
                                      : -std::numeric_limits<double>::infinity();
    rescale(std::max(lw, ln));
    sums_.productive_weight += scaled(lw);
    sums_.productive_norms += scaled(ln);
    sums_.total_weight += scaled(lw);
    last_log_gamma_ = lg;
    ++k_;
  }

  void add_nonproductive(double gamma, double dual_norm) {
    const double lg = std::log(gamma);
    const double lw = -m_ * lg;
    const double ln = dual_norm > 0.0 ? 2.0 * std::log(dual_norm) + (1.0 - m_) * lg
                                      : -std::numeric_limits<double>::infinity();
    rescale(std::max(lw, ln));
    sums_.nonproductive_norms += scaled(ln);
    sums_.total_weight += scaled(lw);
    last_log_gamma_ = lg;
    ++k_;
  }

  /// Both sides at the current k (the last step added).
  Sides evaluate() const {
    const double lhs = MgD_ * sums_.productive_weight;
    const double radius_term = R_ * std::exp(-(m_ + 1.0) * last_log_gamma_ - sums_.log_scale);
    const double rhs = radius_term + (sums_.productive_norms + sums_.nonproductive_norms) / (2.0 * sigma_) +
                       (MgD_ - epsilon_) * sums_.total_weight;
    return {lhs, rhs, sums_.log_scale};
  }

  const Sums& sums() const { return sums_; }
  std::size_t steps() const { return k_; }

 private:
  void rescale(double candidate) {
    if (candidate > sums_.log_scale) {
      const double shrink = std::exp(sums_.log_scale - candidate);
      sums_.productive_weight *= shrink;
      sums_.productive_norms *= shrink;
      sums_.nonproductive_norms *= shrink;
      sums_.total_weight *= shrink;
      sums_.log_scale = candidate;
    }
  }

  double scaled(double log_value) const { return std::exp(log_value - sums_.log_scale); }

  double m_, sigma_, R_, MgD_, epsilon_;
  Sums sums_;
  double last_log_gamma_ = 0.0;
  std::size_t k_ = 0;
};

// ---------------------------------------------------------------------------
// Runs.

struct RunResult {
  std::string solver;
  std::vector<Vector> iterates;  // x^1 .. x^{K+1}; empty when N > kFullLogLimit
  Vector weighted_output;        // x_hat with the configured m
  Vector mean_output;            // m = 0
  Vector tilde_output;           // m = -1
  Vector last_iterate;
  std::vector<double> step_sizes;
  std::vector<double> dual_norms;  // ||F(x^k)||_* or ||grad g(x^k)||_*
  std::vector<Branch> branches;
  std::vector<std::size_t> productive_set;     // switching method only
  std::vector<std::size_t> nonproductive_set;  // switching method only
  StopReason stop_reason = StopReason::BudgetExhausted;
  bool theorem_hypotheses_met = true;
  std::optional<StoppingRule::Sums> stopping_sums;
  std::optional<StoppingRule::Sides> stopping_sides;

  std::size_t iterations() const { return step_sizes.size(); }
};

/// What an observer sees after iteration k. `output` is the solver's current
/// answer: x_hat_k for the mirror methods (empty if no productive step yet),
/// x^{k+1} for the extragradient baseline.
struct IterationView {
  std::size_t k;
  const Vector& x;
  double gamma;
  Branch branch;
  double dual_norm;
  const Vector& output;
};

using IterationObserver = std::function<void(const IterationView&)>;

namespace detail {

inline void check_pairing(const VIInstance& inst, const ProxGeometry& geom) {
  if (!(inst.set() == geom.set())) throw ConfigError("prox geometry and instance use different feasible sets");
}

}  // namespace detail

/// Weighted mirror descent for a constrained VI:
///   x^{k+1} = argmin_Q { <x, F(x^k)> + V(x, x^k) / gamma_k },  k = 1..N
/// with outputs weighted by gamma_k^-m over x^1..x^N.
inline RunResult algorithm1_run(const VIInstance& inst, const ProxGeometry& geom, const SolverConfig& cfg,
                                const IterationObserver& observer = {}) {
  validate(cfg, geom);
  detail::check_pairing(inst, geom);
  if (cfg.schedule == Schedule::ConstraintSplit) throw ConfigError("constraint-split steps need the switching method");

  const Index n = geom.dimension();
  const bool keep_log = cfg.N <= kFullLogLimit;
  RunResult out;
  out.solver = "algorithm1";
  out.theorem_hypotheses_met = cfg.schedule == Schedule::NonAdaptive;
  out.step_sizes.reserve(cfg.N);
  out.dual_norms.reserve(cfg.N);
  out.branches.reserve(cfg.N);
  if (keep_log) out.iterates.reserve(cfg.N + 1);

  WeightedAverager avg(n, cfg.m), avg_mean(n, 0.0), avg_tilde(n, -1.0);
  Vector x = cfg.x1;
  if (keep_log) out.iterates.push_back(x);

  for (std::size_t k = 1; k <= cfg.N; ++k) {
    const Vector fx = inst(x);
    const double fnorm = geom.dual_norm(fx);
    double gamma = 0.0;
    if (cfg.schedule == Schedule::Adaptive) {
      if (!(fnorm > kZeroOperatorFloor)) {
        out.stop_reason = StopReason::ZeroOperatorValue;
        out.weighted_output = out.mean_output = out.tilde_output = out.last_iterate = x;
        return out;
      }
      gamma = step_adaptive(k, geom.sigma(), fnorm);
    } else {
      gamma = step_nonadaptive(k, geom.sigma(), inst.bound());
    }
    avg.add(x, gamma);
    avg_mean.add(x, gamma);
    avg_tilde.add(x, gamma);
    out.step_sizes.push_back(gamma);
    out.dual_norms.push_back(fnorm);
    out.branches.push_back(Branch::Unconstrained);

    Vector next = prox_step(geom, x, fx, gamma);
    if (observer) {
      const Vector current = avg.mean();
      observer(IterationView{k, x, gamma, Branch::Unconstrained, fnorm, current});
    }
    x = std::move(next);
    if (keep_log) out.iterates.push_back(x);
  }
  out.weighted_output = avg.mean();
  out.mean_output = avg_mean.mean();
  out.tilde_output = avg_tilde.mean();
  out.last_iterate = x;
  return out;
}

/// Mirror descent with functional constraints g = max_i g_i, switching
/// between productive steps (g(x^k) <= eps, along F with L_F-based steps)
/// and non-productive steps (along a subgradient of g with M_g-based steps).
/// The stopping rule is checked after every iteration.
inline RunResult algorithm2_run(const VIInstance& inst, const ConstraintStack& constraints, const ProxGeometry& geom,
                                const SolverConfig& cfg, const IterationObserver& observer = {}) {
  validate(cfg, geom);
  detail::check_pairing(inst, geom);
  if (cfg.schedule != Schedule::ConstraintSplit) throw ConfigError("the switching method uses constraint-split steps");

  const Index n = geom.dimension();
  const bool keep_log = cfg.N <= kFullLogLimit;
  const double sigma = geom.sigma();
  RunResult out;
  out.solver = "algorithm2";
  if (keep_log) out.iterates.reserve(cfg.N + 1);

  WeightedAverager avg(n, cfg.m), avg_mean(n, 0.0), avg_tilde(n, -1.0);
  StoppingRule rule(cfg.m, sigma, cfg.R, constraints.lipschitz(), geom.set().diameter(), cfg.epsilon);
  Vector x = cfg.x1;
  if (keep_log) out.iterates.push_back(x);
  const Vector none;

  for (std::size_t k = 1; k <= cfg.N; ++k) {
    const auto eval = constraints.evaluate(x);
    Vector direction;
    double gamma = 0.0;
    double dnorm = 0.0;
    Branch branch;
    if (eval.value <= cfg.epsilon) {
      branch = Branch::Productive;
      direction = inst(x);
      dnorm = geom.dual_norm(direction);
      gamma = step_nonadaptive(k, sigma, inst.bound());
      avg.add(x, gamma);
      avg_mean.add(x, gamma);
      avg_tilde.add(x, gamma);
      out.productive_set.push_back(k);
      rule.add_productive(gamma, dnorm);
    } else {
      branch = Branch::NonProductive;
      direction = constraints.constraints()[eval.active].subgradient(x);
      detail::require_dim(direction, n, "constraint subgradient");
      dnorm = geom.dual_norm(direction);
      gamma = step_nonadaptive(k, sigma, constraints.lipschitz());
      out.nonproductive_set.push_back(k);
      rule.add_nonproductive(gamma, dnorm);
    }
    out.step_sizes.push_back(gamma);
    out.dual_norms.push_back(dnorm);
    out.branches.push_back(branch);

    Vector next = prox_step(geom, x, direction, gamma);
    if (observer) {
      const Vector current = avg.empty() ? none : avg.mean();
      observer(IterationView{k, x, gamma, branch, dnorm, current});
    }
    x = std::move(next);
    if (keep_log) out.iterates.push_back(x);

    const auto sides = rule.evaluate();
    out.stopping_sides = sides;
    if (sides.met()) {
      out.stop_reason = StopReason::StoppingRuleMet;
      break;
    }
  }
  out.stopping_sums = rule.sums();
  out.last_iterate = x;
  if (avg.empty()) {
    throw NoProductiveSteps("no productive step in " + std::to_string(out.iterations()) +
                            " iterations; decrease epsilon or raise N");
  }
  out.weighted_output = avg.mean();
  out.mean_output = avg_mean.mean();
  out.tilde_output = avg_tilde.mean();
  return out;
}

/// Extragradient baseline (Euclidean only), constant step lambda = 1/(sqrt 2 L_F):
///   y^k     = P_Q(x^k - lambda F(x^k))
///   x^{k+1} = P_Q(x^k - lambda F(y^k))
/// Reports the last iterate, not an average.
inline RunResult mpm_baseline_run(const VIInstance& inst, const ProxGeometry& geom, const SolverConfig& cfg,
                                  const IterationObserver& observer = {}) {
  if (!geom.is_euclidean()) throw ConfigError("the extragradient baseline needs the Euclidean prox-structure");
  validate(cfg, geom);
  detail::check_pairing(inst, geom);

  const bool keep_log = cfg.N <= kFullLogLimit;
  const double lambda = 1.0 / (std::sqrt(2.0) * inst.bound());
  const FeasibleSet& set = geom.set();
  RunResult out;
  out.solver = "mpm";
  if (keep_log) out.iterates.reserve(cfg.N + 1);
  Vector x = cfg.x1;
  if (keep_log) out.iterates.push_back(x);

  for (std::size_t k = 1; k <= cfg.N; ++k) {
    const Vector fx = inst(x);
    const Vector y = set.project(x - lambda * fx);
    Vector next = set.project(x - lambda * inst(y));
    const double fnorm = geom.dual_norm(fx);
    out.step_sizes.push_back(lambda);
    out.dual_norms.push_back(fnorm);
    out.branches.push_back(Branch::Unconstrained);
    if (observer) observer(IterationView{k, x, lambda, Branch::Unconstrained, fnorm, next});
    x = std::move(next);
    if (keep_log) out.iterates.push_back(x);
  }
  out.weighted_output = out.mean_output = out.tilde_output = out.last_iterate = x;
  return out;
}

}  // namespace mirrorvi
