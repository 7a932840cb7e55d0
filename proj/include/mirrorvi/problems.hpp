#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mirrorvi/errors.hpp"
#include "mirrorvi/geometry.hpp"
#include "mirrorvi/random.hpp"

namespace mirrorvi {

using Operator = std::function<Vector(const Vector&)>;

/// Operator F over a feasible set Q, with the declared constants used by
/// step rules and bounds: L_F >= sup ||F(x)|| on Q and the monotonicity
/// defect delta (0 for monotone F).
class VIInstance {
 public:
  VIInstance(std::string name, Operator op, FeasibleSet set, double bound, double delta = 0.0,
             std::optional<Vector> known_solution = std::nullopt)
      : name_(std::move(name)),
        op_(std::move(op)),
        set_(std::move(set)),
        bound_(bound),
        delta_(delta),
        known_solution_(std::move(known_solution)) {
    if (!op_) throw InvalidInput("operator must be callable");
    if (!(bound_ > 0.0) || !std::isfinite(bound_)) throw InvalidInput("operator bound L_F must be positive");
    if (!(delta_ >= 0.0) || !std::isfinite(delta_)) throw InvalidInput("monotonicity defect must be non-negative");
    if (known_solution_) detail::require_dim(*known_solution_, set_.dimension(), "known solution");
  }

  Vector operator()(const Vector& x) const {
    detail::require_dim(x, dimension(), "operator argument");
    Vector out = op_(x);
    detail::require_dim(out, dimension(), "operator value");
    return out;
  }

  const std::string& name() const { return name_; }
  Index dimension() const { return set_.dimension(); }
  double bound() const { return bound_; }
  double delta() const { return delta_; }
  const FeasibleSet& set() const { return set_; }
  const std::optional<Vector>& known_solution() const { return known_solution_; }

 private:
  std::string name_;
  Operator op_;
  FeasibleSet set_;
  double bound_;
  double delta_;
  std::optional<Vector> known_solution_;
};

// ---------------------------------------------------------------------------
// Benchmark operators (all on the unit ball, Euclidean norms).

/// F(x1, x2) = (2x1 + 2x2 + sin x1, -2x1 + 2x2 + sin x2).
/// Linear part M = [[2, 2], [-2, 2]] has ||M||_2 = 2 sqrt 2 and the sine part
/// is bounded by sqrt 2, so L_F = 3 sqrt 2 on the unit ball.
inline VIInstance example1_2d() {
  Operator op = [](const Vector& x) {
    Vector out(2);
    out << 2.0 * x[0] + 2.0 * x[1] + std::sin(x[0]), -2.0 * x[0] + 2.0 * x[1] + std::sin(x[1]);
    return out;
  };
  return VIInstance("example1", std::move(op), FeasibleSet::unit_ball(2), 3.0 * std::sqrt(2.0), 0.0,
                    Vector::Zero(2));
}

/// F = (I + S) x + sin(x) with S skew-symmetric,
///   F1 = x1 - s x2 + t x3 + sin x1
///   F2 = x2 - r x3 + s x1 + sin x2
///   F3 = x3 - t x1 + r x2 + sin x3
/// ||I + S||_2 = sqrt(1 + r^2 + s^2 + t^2) and the sine part is bounded by sqrt 3.
inline VIInstance example2_3d(double r, double s, double t) {
  if (!std::isfinite(r) || !std::isfinite(s) || !std::isfinite(t)) throw InvalidInput("example2 parameters must be finite");
  Operator op = [r, s, t](const Vector& x) {
    Vector out(3);
    out << x[0] - s * x[1] + t * x[2] + std::sin(x[0]),
           x[1] - r * x[2] + s * x[0] + std::sin(x[1]),
           x[2] - t * x[0] + r * x[1] + std::sin(x[2]);
    return out;
  };
  const double bound = std::sqrt(1.0 + r * r + s * s + t * t) + std::sqrt(3.0);
  return VIInstance("example2", std::move(op), FeasibleSet::unit_ball(3), bound, 0.0, Vector::Zero(3));
}

/// Largest singular value, as the square root of the top eigenvalue of K^T K
/// from a symmetric eigensolver. Plain power iteration with a change-based
/// stop can stall well short of the top value when the leading singular
/// values are close, which would understate L_F.
inline double spectral_norm(const Matrix& k) {
  if (k.size() == 0) throw InvalidInput("spectral norm of an empty matrix");
  const Matrix gram = k.transpose() * k;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw InvalidInput("spectral norm: eigensolver failed");
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

/// Affine operator F(x) = K x + q with its generating components.
struct HpHardProblem {
  Index n = 0;
  std::uint64_t seed = 0;
  Matrix K;
  Vector q;
  double bound = 0.0;  // ||K||_2 + ||q||_2
  // Generation components; empty when loaded from a problem file.
  Matrix A, B, C;

  VIInstance instance() const {
    Operator op = [k = K, qq = q](const Vector& x) -> Vector { return k * x + qq; };
    std::optional<Vector> solution;
    if (q.isZero(0.0)) solution = Vector::Zero(n);
    return VIInstance("hphard", std::move(op), FeasibleSet::unit_ball(n), bound, 0.0, std::move(solution));
  }
};

/// K = A A^T + B + C with, in stream order,
///   A: n*n normals (mean 0, scale 0.01), row-major
///   B: normals of the strict upper triangle, row-major, mirrored with a sign flip
///   C: n diagonal uniforms on [0, 1)
inline HpHardProblem generate_hphard(Index n, std::uint64_t seed, const Vector& q) {
  if (n < 1) throw InvalidInput("HpHard dimension must be positive");
  detail::require_dim(q, n, "HpHard affine term");
  detail::require_finite(q, "HpHard affine term");
  Rng rng(seed);
  HpHardProblem p;
  p.n = n;
  p.seed = seed;
  p.A.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) p.A(i, j) = rng.normal(0.0, 0.01);
  p.B = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      p.B(i, j) = rng.normal(0.0, 0.01);
      p.B(j, i) = -p.B(i, j);
    }
  p.C = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) p.C(i, i) = rng.uniform();
  p.K = p.A * p.A.transpose() + p.B + p.C;
  p.q = q;
  p.bound = spectral_norm(p.K) + q.norm();
  return p;
}

inline VIInstance hphard_generate(Index n, std::uint64_t seed, const Vector& q) {
  return generate_hphard(n, seed, q).instance();
}

/// Directly constructed affine instance on the unit ball. K must have a
/// positive semidefinite symmetric part so that delta = 0 holds.
inline HpHardProblem affine_problem(Matrix k, Vector q, std::uint64_t seed = 0) {
  if (k.rows() != k.cols() || k.rows() < 1) throw InvalidInput("affine operator matrix must be square");
  detail::require_dim(q, k.rows(), "affine term");
  if (!k.allFinite() || !q.allFinite()) throw InvalidInput("affine operator has non-finite entries");
  const Matrix sym = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) throw InvalidInput("affine operator is not monotone");
  HpHardProblem p;
  p.n = k.rows();
  p.seed = seed;
  p.K = std::move(k);
  p.q = std::move(q);
  p.bound = spectral_norm(p.K) + p.q.norm();
  if (!(p.bound > 0.0)) p.bound = std::numeric_limits<double>::min();
  return p;
}

// Problem file: {"n", "seed", "q", "K" (row-major), "L_F"}.
inline nlohmann::json to_json(const HpHardProblem& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["seed"] = p.seed;
  j["q"] = std::vector<double>(p.q.data(), p.q.data() + p.q.size());
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(p.n * p.n));
  for (Index i = 0; i < p.n; ++i)
    for (Index c = 0; c < p.n; ++c) rows.push_back(p.K(i, c));
  j["K"] = std::move(rows);
  j["L_F"] = p.bound;
  return j;
}

inline HpHardProblem hphard_from_json(const nlohmann::json& j) {
  try {
    HpHardProblem p;
    p.n = j.at("n").get<Index>();
    p.seed = j.at("seed").get<std::uint64_t>();
    const auto q = j.at("q").get<std::vector<double>>();
    const auto k = j.at("K").get<std::vector<double>>();
    p.bound = j.at("L_F").get<double>();
    if (p.n < 1) throw InvalidInput("problem file: n must be positive");
    if (static_cast<Index>(q.size()) != p.n) throw InvalidInput("problem file: q has wrong length");
    if (static_cast<Index>(k.size()) != p.n * p.n) throw InvalidInput("problem file: K has wrong length");
    if (!(p.bound > 0.0)) throw InvalidInput("problem file: L_F must be positive");
    p.q = Eigen::Map<const Vector>(q.data(), p.n);
    p.K.resize(p.n, p.n);
    for (Index i = 0; i < p.n; ++i)
      for (Index c = 0; c < p.n; ++c) p.K(i, c) = k[static_cast<std::size_t>(i * p.n + c)];
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("problem file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reductions to variational inequalities.

/// Minimization of a convex f on Q: F = grad f.
inline VIInstance gradient_adapter(Operator grad, FeasibleSet set, double bound, double delta = 0.0) {
  return VIInstance("gradient", std::move(grad), std::move(set), bound, delta);
}

using PartialGradient = std::function<Vector(const Vector& u, const Vector& v)>;

/// min_u max_v f(u, v) on Q = Q_u x Q_v, x = (u, v) split after `split`
/// coordinates: F(u, v) = (grad_u f, -grad_v f).
inline VIInstance saddle_adapter(PartialGradient grad_u, PartialGradient grad_v, Index split, FeasibleSet set,
                                 double bound, double delta = 0.0) {
  const Index n = set.dimension();
  if (split < 1 || split >= n) throw InvalidInput("saddle split index out of range");
  if (!grad_u || !grad_v) throw InvalidInput("saddle gradients must be callable");
  Operator op = [gu = std::move(grad_u), gv = std::move(grad_v), split, n](const Vector& x) {
    const Vector u = x.head(split);
    const Vector v = x.tail(n - split);
    Vector out(n);
    out.head(split) = gu(u, v);
    out.tail(n - split) = -gv(u, v);
    return out;
  };
  return VIInstance("saddle", std::move(op), std::move(set), bound, delta);
}

/// Fixed point T(x) = x: F = x - T(x).
inline VIInstance fixedpoint_adapter(Operator t, FeasibleSet set, double bound, double delta = 0.0) {
  if (!t) throw InvalidInput("fixed-point map must be callable");
  Operator op = [tt = std::move(t)](const Vector& x) -> Vector { return x - tt(x); };
  return VIInstance("fixedpoint", std::move(op), std::move(set), bound, delta);
}

// ---------------------------------------------------------------------------
// Functional constraints g_i(x) <= 0 aggregated as g = max_i g_i.

struct Constraint {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgradient;
  double lipschitz;
};

class ConstraintStack {
 public:
  struct Evaluation {
    double value;
    std::size_t active;  // lowest index attaining the max
  };

  explicit ConstraintStack(std::vector<Constraint> constraints) : constraints_(std::move(constraints)) {
    if (constraints_.empty()) throw InvalidInput("constraint stack must not be empty");
    for (const auto& c : constraints_) {
      if (!c.value || !c.subgradient) throw InvalidInput("constraint callables must be set");
      if (!(c.lipschitz > 0.0) || !std::isfinite(c.lipschitz)) throw InvalidInput("constraint Lipschitz constant must be positive");
      lipschitz_ = std::max(lipschitz_, c.lipschitz);
    }
  }

  Evaluation evaluate(const Vector& x) const {
    Evaluation best{constraints_[0].value(x), 0};
    for (std::size_t i = 1; i < constraints_.size(); ++i) {
      const double v = constraints_[i].value(x);
      if (v > best.value) best = {v, i};
    }
    if (std::isnan(best.value)) throw InvalidInput("constraint evaluated to NaN");
    return best;
  }

  double operator()(const Vector& x) const { return evaluate(x).value; }

  /// Subgradient of the aggregate: one of the maximizing component.
  Vector subgradient(const Vector& x) const {
    const auto e = evaluate(x);
    return constraints_[e.active].subgradient(x);
  }

  double lipschitz() const { return lipschitz_; }
  std::size_t size() const { return constraints_.size(); }
  const std::vector<Constraint>& constraints() const { return constraints_; }

 private:
  std::vector<Constraint> constraints_;
  double lipschitz_ = 0.0;
};

/// g_i(x) = ||x - c_i||_2 - r_i, each 1-Lipschitz.
inline ConstraintStack ball_constraint_stack(const std::vector<double>& radii, const std::vector<Vector>& centers) {
  if (radii.empty() || centers.empty()) throw InvalidInput("ball constraint lists must be non-empty");
  if (radii.size() != centers.size()) throw InvalidInput("ball constraint lists must have equal length");
  std::vector<Constraint> out;
  out.reserve(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw InvalidInput("ball constraint radius must be positive");
    detail::require_finite(centers[i], "ball constraint center");
    const Vector c = centers[i];
    const double r = radii[i];
    out.push_back(Constraint{
        [c, r](const Vector& x) { return (x - c).norm() - r; },
        [c](const Vector& x) -> Vector {
          const Vector d = x - c;
          const double len = d.norm();
          if (len == 0.0) return Vector::Zero(d.size());
          return d / len;
        },
        1.0});
  }
  return ConstraintStack(std::move(out));
}

/// g_i(x) = <a_i, x> - b_i, Lipschitz with ||a_i||_2.
inline ConstraintStack halfspace_constraint_stack(const std::vector<Vector>& normals, const std::vector<double>& offsets) {
  if (normals.empty() || normals.size() != offsets.size()) throw InvalidInput("halfspace lists must be non-empty and of equal length");
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const Vector a = normals[i];
    const double b = offsets[i];
    if (!(a.norm() > 0.0)) throw InvalidInput("halfspace normal must be non-zero");
    out.push_back(Constraint{[a, b](const Vector& x) { return a.dot(x) - b; },
                             [a](const Vector&) -> Vector { return a; }, a.norm()});
  }
  return ConstraintStack(std::move(out));
}

// ---------------------------------------------------------------------------
// Sampled invariant checks (Euclidean norms, seeded uniform draws from Q).

/// max over samples of ||F(x)||_2 - L_F; <= 0 when the declared bound holds.
inline double sampled_bound_excess(const VIInstance& inst, int samples, std::uint64_t seed) {
  Rng rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vector x = inst.set().sample(rng);
    worst = std::max(worst, inst(x).norm() - inst.bound());
  }
  return worst;
}

/// min over sampled pairs of <F(y) - F(x), y - x> + delta; >= 0 for a delta-monotone F.
inline double sampled_monotonicity_slack(const VIInstance& inst, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < pairs; ++s) {
    const Vector x = inst.set().sample(rng);
    const Vector y = inst.set().sample(rng);
    worst = std::min(worst, (inst(y) - inst(x)).dot(y - x) + inst.delta());
  }
  return worst;
}

/// max over sampled pairs of |g(x) - g(y)| - M_g ||x - y||_2.
inline double sampled_lipschitz_excess(const ConstraintStack& g, const FeasibleSet& set, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < pairs; ++s) {
    const Vector x = set.sample(rng);
    const Vector y = set.sample(rng);
    worst = std::max(worst, std::abs(g(x) - g(y)) - g.lipschitz() * (x - y).norm());
  }
  return worst;
}

}  // namespace mirrorvi
