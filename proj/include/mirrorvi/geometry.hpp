#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "mirrorvi/errors.hpp"
#include "mirrorvi/random.hpp"

namespace mirrorvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kMembershipTol = 1e-9;
// Entropy logs are taken of max(x_i, kEntropyFloor) so zero coordinates stay finite.
inline constexpr double kEntropyFloor = 1e-300;

enum class NormKind { Euclidean, L1 };
enum class PsiKind { HalfSquaredEuclidean, NegativeEntropy };

struct Ball {
  Vector center;
  double radius;
};

struct Box {
  Vector lower;
  Vector upper;
};

struct Simplex {
  Index dimension;
};

namespace detail {

inline void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

inline void require_dim(const Vector& x, Index n, const char* what) {
  if (x.size() != n) {
    throw InvalidInput(std::string(what) + ": expected dimension " + std::to_string(n) +
                       ", got " + std::to_string(x.size()));
  }
}

}  // namespace detail

/// Convex compact set Q. Each kind carries a closed-form diameter and, for
/// Ball and Box, a closed-form Euclidean projection.
class FeasibleSet {
 public:
  using Kind = std::variant<Ball, Box, Simplex>;

  static FeasibleSet ball(Vector center, double radius) {
    detail::require_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("ball radius must be positive");
    if (center.size() < 1) throw InvalidInput("ball dimension must be positive");
    return FeasibleSet(Ball{std::move(center), radius});
  }

  static FeasibleSet unit_ball(Index n) { return ball(Vector::Zero(n), 1.0); }

  static FeasibleSet box(Vector lower, Vector upper) {
    detail::require_finite(lower, "box lower");
    detail::require_finite(upper, "box upper");
    if (lower.size() < 1 || lower.size() != upper.size()) throw InvalidInput("box bounds must have equal positive length");
    if ((upper.array() < lower.array()).any()) throw InvalidInput("box lower bound exceeds upper bound");
    return FeasibleSet(Box{std::move(lower), std::move(upper)});
  }

  static FeasibleSet simplex(Index n) {
    if (n < 1) throw InvalidInput("simplex dimension must be positive");
    return FeasibleSet(Simplex{n});
  }

  const Kind& kind() const { return kind_; }

  bool is_ball() const { return std::holds_alternative<Ball>(kind_); }
  bool is_box() const { return std::holds_alternative<Box>(kind_); }
  bool is_simplex() const { return std::holds_alternative<Simplex>(kind_); }

  Index dimension() const {
    return std::visit(
        [](const auto& s) -> Index {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) return s.center.size();
          else if constexpr (std::is_same_v<T, Box>) return s.lower.size();
          else return s.dimension;
        },
        kind_);
  }

  /// Ball: 2r. Box: Euclidean length of the main diagonal. Simplex: 2 (L1).
  double diameter() const {
    return std::visit(
        [](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) return 2.0 * s.radius;
          else if constexpr (std::is_same_v<T, Box>) return (s.upper - s.lower).norm();
          else return 2.0;
        },
        kind_);
  }

  /// A point of Q that is "central": ball center, box midpoint, simplex barycenter.
  Vector center() const {
    return std::visit(
        [](const auto& s) -> Vector {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) return s.center;
          else if constexpr (std::is_same_v<T, Box>) return 0.5 * (s.lower + s.upper);
          else return Vector::Constant(s.dimension, 1.0 / static_cast<double>(s.dimension));
        },
        kind_);
  }

  bool contains(const Vector& x, double tol = kMembershipTol) const {
    if (x.size() != dimension() || !x.allFinite()) return false;
    return std::visit(
        [&](const auto& s) -> bool {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) {
            return (x - s.center).norm() <= s.radius + tol;
          } else if constexpr (std::is_same_v<T, Box>) {
            return (x.array() >= s.lower.array() - tol).all() &&
                   (x.array() <= s.upper.array() + tol).all();
          } else {
            return (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol;
          }
        },
        kind_);
  }

  /// Euclidean projection. Ball: radial rescale. Box: componentwise clamp.
  Vector project(const Vector& y) const {
    detail::require_dim(y, dimension(), "projection input");
    return std::visit(
        [&](const auto& s) -> Vector {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ball>) {
            const Vector d = y - s.center;
            const double r = d.norm();
            if (r <= s.radius) return y;
            return s.center + (s.radius / r) * d;
          } else if constexpr (std::is_same_v<T, Box>) {
            return y.cwiseMax(s.lower).cwiseMin(s.upper);
          } else {
            throw ConfigError("Euclidean projection onto the simplex is not provided");
          }
        },
        kind_);
  }

  friend bool operator==(const FeasibleSet& a, const FeasibleSet& b) {
    if (a.kind_.index() != b.kind_.index()) return false;
    return std::visit(
        [&](const auto& s) -> bool {
          using T = std::decay_t<decltype(s)>;
          const auto& o = std::get<T>(b.kind_);
          if constexpr (std::is_same_v<T, Ball>) {
            return s.radius == o.radius && s.center.size() == o.center.size() && s.center == o.center;
          } else if constexpr (std::is_same_v<T, Box>) {
            return s.lower.size() == o.lower.size() && s.lower == o.lower && s.upper == o.upper;
          } else {
            return s.dimension == o.dimension;
          }
        },
        a.kind_);
  }

  /// Uniform draw from Q.
  ///   Ball: normalized Gaussian direction, radius scaled by U^(1/n).
  ///   Box: independent uniforms per coordinate.
  ///   Simplex: normalized exponential spacings.
  Vector sample(Rng& rng) const {
    const Index n = dimension();
    return std::visit(
        [&](const auto& s) -> Vector {
          using T = std::decay_t<decltype(s)>;
          Vector out(n);
          if constexpr (std::is_same_v<T, Ball>) {
            double norm2 = 0.0;
            do {
              for (Index i = 0; i < n; ++i) out[i] = rng.normal();
              norm2 = out.squaredNorm();
            } while (norm2 == 0.0);
            const double r = s.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
            return s.center + (r / std::sqrt(norm2)) * out;
          } else if constexpr (std::is_same_v<T, Box>) {
            for (Index i = 0; i < n; ++i) out[i] = rng.uniform(s.lower[i], s.upper[i]);
            return out;
          } else {
            for (Index i = 0; i < n; ++i) out[i] = -std::log1p(-rng.uniform());
            return out / out.sum();
          }
        },
        kind_);
  }

 private:
  explicit FeasibleSet(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_;
};

/// A norm, a prox-function with its strong-convexity modulus, and the set
/// the prox-steps are solved on. Only pairs with closed-form prox-steps are
/// admissible:
///   HalfSquaredEuclidean + Euclidean norm on a Ball or Box (sigma = 1)
///   NegativeEntropy + L1 norm on the Simplex (sigma = 1)
class ProxGeometry {
 public:
  ProxGeometry(NormKind norm, PsiKind psi, double sigma, FeasibleSet set)
      : norm_(norm), psi_(psi), sigma_(sigma), set_(std::move(set)) {
    if (psi_ == PsiKind::HalfSquaredEuclidean) {
      if (norm_ != NormKind::Euclidean) throw ConfigError("half squared Euclidean prox-function requires the Euclidean norm");
      if (set_.is_simplex()) throw ConfigError("half squared Euclidean prox-function is supported on Ball and Box sets only");
    } else {
      if (norm_ != NormKind::L1) throw ConfigError("negative entropy prox-function requires the L1 norm");
      if (!set_.is_simplex()) throw ConfigError("negative entropy prox-function is supported on the Simplex only");
    }
    if (sigma_ != 1.0) throw ConfigError("strong-convexity modulus must be 1 for the supported prox-structures");
  }

  static ProxGeometry euclidean(FeasibleSet set) {
    return ProxGeometry(NormKind::Euclidean, PsiKind::HalfSquaredEuclidean, 1.0, std::move(set));
  }

  static ProxGeometry entropy(Index n) {
    return ProxGeometry(NormKind::L1, PsiKind::NegativeEntropy, 1.0, FeasibleSet::simplex(n));
  }

  NormKind norm_kind() const { return norm_; }
  PsiKind psi_kind() const { return psi_; }
  double sigma() const { return sigma_; }
  const FeasibleSet& set() const { return set_; }
  Index dimension() const { return set_.dimension(); }
  bool is_euclidean() const { return psi_ == PsiKind::HalfSquaredEuclidean; }

  double norm(const Vector& x) const {
    return norm_ == NormKind::Euclidean ? x.norm() : x.lpNorm<1>();
  }

  /// Dual of norm(): Euclidean is self-dual, L1 pairs with L-infinity.
  double dual_norm(const Vector& v) const {
    return norm_ == NormKind::Euclidean ? v.norm() : v.lpNorm<Eigen::Infinity>();
  }

  double psi(const Vector& x) const {
    check_primal(x, "psi argument");
    if (is_euclidean()) return 0.5 * x.squaredNorm();
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) acc += x[i] * std::log(std::max(x[i], kEntropyFloor));
    return acc;
  }

  Vector grad_psi(const Vector& x) const {
    check_primal(x, "gradient argument");
    if (is_euclidean()) return x;
    return x.unaryExpr([](double t) { return std::log(std::max(t, kEntropyFloor)) + 1.0; });
  }

  /// Dimension, finiteness and (for entropy) non-negativity of a primal point.
  void check_primal(const Vector& x, const char* what) const {
    detail::require_dim(x, dimension(), what);
    detail::require_finite(x, what);
    if (!is_euclidean() && (x.array() < 0.0).any()) {
      throw InvalidInput(std::string(what) + " has negative entries (entropy domain)");
    }
  }

 private:
  NormKind norm_;
  PsiKind psi_;
  double sigma_;
  FeasibleSet set_;
};

/// V(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>.
inline double bregman_divergence(const ProxGeometry& geom, const Vector& x, const Vector& y) {
  geom.check_primal(x, "bregman x");
  geom.check_primal(y, "bregman y");
  if (geom.is_euclidean()) return 0.5 * (x - y).squaredNorm();
  // Expanded form: sum x log(x/y) - x + y; equals KL(x||y) on the simplex.
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double lx = std::log(std::max(x[i], kEntropyFloor));
    const double ly = std::log(std::max(y[i], kEntropyFloor));
    acc += x[i] * (lx - ly) - x[i] + y[i];
  }
  return acc;
}

/// argmin over Q of <z, v> + V(z, x) / gamma.
inline Vector prox_step(const ProxGeometry& geom, const Vector& x, const Vector& v, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("prox step size must be positive and finite");
  geom.check_primal(x, "prox center");
  detail::require_dim(v, geom.dimension(), "prox direction");
  detail::require_finite(v, "prox direction");
  if (!geom.set().contains(x)) throw InvalidInput("prox center lies outside the feasible set");

  if (geom.is_euclidean()) return geom.set().project(x - gamma * v);

  // Multiplicative update, shifted by the max exponent before exp().
  const Index n = x.size();
  Vector logits(n);
  double top = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (x[i] > 0.0) {
      logits[i] = std::log(x[i]) - gamma * v[i];
      top = std::max(top, logits[i]);
    }
  }
  Vector out = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (x[i] > 0.0) out[i] = std::exp(logits[i] - top);
  }
  return out / out.sum();
}

/// <grad psi(b) - grad psi(a), c - a> - (V(c,a) + V(a,b) - V(c,b)); zero up to rounding.
inline double three_points_residual(const ProxGeometry& geom, const Vector& a, const Vector& b, const Vector& c) {
  const double lhs = (geom.grad_psi(b) - geom.grad_psi(a)).dot(c - a);
  const double rhs = bregman_divergence(geom, c, a) + bregman_divergence(geom, a, b) -
                     bregman_divergence(geom, c, b);
  return lhs - rhs;
}

/// ||a||_*^2 / (2 lambda) + lambda ||b||^2 / 2 - <a, b>; never negative.
inline double fenchel_young_slack(const ProxGeometry& geom, const Vector& a, const Vector& b, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("Fenchel-Young lambda must be positive");
  detail::require_dim(a, geom.dimension(), "dual argument");
  detail::require_dim(b, geom.dimension(), "primal argument");
  const double da = geom.dual_norm(a);
  const double pb = geom.norm(b);
  return da * da / (2.0 * lambda) + lambda * pb * pb / 2.0 - a.dot(b);
}

}  // namespace mirrorvi
