#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mirrorvi/errors.hpp"
#include "mirrorvi/geometry.hpp"
#include "mirrorvi/problems.hpp"
#include "mirrorvi/random.hpp"

namespace mirrorvi {

/// Sampled lower bound on Gap(x_hat) = max_{u in Q} <F(u), x_hat - u>.
struct GapEstimate {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t samples = 0;  // candidates evaluated, deterministic ones included
  std::uint64_t seed = 0;
  Vector argmax;
};

namespace detail {

// Points of Q that a blind uniform draw rarely reaches: extreme points along
// the coordinate axes and a grid on segments toward x_hat.
inline std::vector<Vector> gap_candidates(const Vector& xhat, const VIInstance& inst, std::span<const Vector> anchors) {
  const FeasibleSet& set = inst.set();
  const Index n = set.dimension();
  std::vector<Vector> out;
  out.push_back(xhat);
  std::vector<Vector> ends(anchors.begin(), anchors.end());
  if (inst.known_solution()) ends.push_back(*inst.known_solution());
  ends.push_back(set.center());
  for (const auto& a : ends) {
    if (set.contains(a)) out.push_back(a);
  }
  if (const auto* b = std::get_if<Ball>(&set.kind())) {
    for (Index i = 0; i < n; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vector u = b->center;
        u[i] += sgn * b->radius;
        out.push_back(std::move(u));
      }
    }
  } else if (const auto* bx = std::get_if<Box>(&set.kind())) {
    const Vector mid = set.center();
    for (Index i = 0; i < n; ++i) {
      Vector lo = mid, hi = mid;
      lo[i] = bx->lower[i];
      hi[i] = bx->upper[i];
      out.push_back(std::move(lo));
      out.push_back(std::move(hi));
    }
  } else {
    for (Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i));
  }
  constexpr int kSegmentPoints = 16;
  for (const auto& a : ends) {
    if (!set.contains(a)) continue;
    for (int j = 1; j < kSegmentPoints; ++j) {
      const double t = static_cast<double>(j) / kSegmentPoints;
      out.push_back(a + t * (xhat - a));
    }
  }
  return out;
}

}  // namespace detail

/// Evaluates <F(u), x_hat - u> over deterministic candidates (x_hat, the
/// anchors, the known solution, the set center, axis extreme points,
/// segments from each anchor to x_hat) followed by n_samples uniform draws
/// from Q, and keeps the maximum. Every candidate lies in Q, so the value is
/// a valid lower bound on the restricted gap.
inline GapEstimate gap_sampled(const Vector& xhat, const VIInstance& inst, std::size_t n_samples, std::uint64_t seed,
                               std::span<const Vector> anchors = {}) {
  if (!inst.set().contains(xhat)) throw InvalidInput("gap point lies outside the feasible set");
  GapEstimate est;
  est.seed = seed;
  auto consider = [&](const Vector& u) {
    const double v = inst(u).dot(xhat - u);
    ++est.samples;
    if (v > est.value) {
      est.value = v;
      est.argmax = u;
    }
  };
  for (const auto& u : detail::gap_candidates(xhat, inst, anchors)) consider(u);
  Rng rng(seed);
  for (std::size_t s = 0; s < n_samples; ++s) consider(inst.set().sample(rng));
  return est;
}

/// ||F(x_hat)||_2^2 / ||F(x^1)||_2^2.
inline double residual_metric(const Vector& xhat, const VIInstance& inst, const Vector& x1) {
  const double base = inst(x1).squaredNorm();
  if (!(base > 0.0)) throw InvalidInput("F(x1) = 0: residual ratio undefined");
  return inst(xhat).squaredNorm() / base;
}

/// Right-hand side of the weighted mirror-descent bound
///   (R / g_N^(m+1) + (1/2 sigma) sum ||F(x^k)||_*^2 g_k^(1-m)) / sum g_k^-m + delta,
/// evaluated in the log domain.
inline double theorem1_rhs(std::span<const double> gammas, std::span<const double> dual_norms, double R, double sigma,
                           double m, double delta) {
  if (gammas.empty() || gammas.size() != dual_norms.size()) throw InvalidInput("bound needs equal, non-empty lists");
  double top = -std::numeric_limits<double>::infinity();
  for (double g : gammas) {
    if (!(g > 0.0)) throw InvalidInput("bound needs positive step sizes");
    top = std::max(top, -m * std::log(g));
  }
  double weight = 0.0, norms = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const double lg = std::log(gammas[k]);
    weight += std::exp(-m * lg - top);
    if (dual_norms[k] > 0.0) norms += std::exp(2.0 * std::log(dual_norms[k]) + (1.0 - m) * lg - top);
  }
  const double radius = R * std::exp(-(m + 1.0) * std::log(gammas.back()) - top);
  return (radius + norms / (2.0 * sigma)) / weight + delta;
}

/// theorem1_rhs maintained one step at a time.
class Theorem1Bound {
 public:
  Theorem1Bound(double R, double sigma, double m, double delta) : R_(R), sigma_(sigma), m_(m), delta_(delta) {}

  void add(double gamma, double dual_norm) {
    const double lg = std::log(gamma);
    const double lw = -m_ * lg;
    if (lw > top_) {
      const double shrink = std::exp(top_ - lw);
      weight_ *= shrink;
      norms_ *= shrink;
      top_ = lw;
    }
    weight_ += std::exp(lw - top_);
    if (dual_norm > 0.0) norms_ += std::exp(2.0 * std::log(dual_norm) + (1.0 - m_) * lg - top_);
    last_log_gamma_ = lg;
  }

  double value() const {
    const double radius = R_ * std::exp(-(m_ + 1.0) * last_log_gamma_ - top_);
    return (radius + norms_ / (2.0 * sigma_)) / weight_ + delta_;
  }

 private:
  double R_, sigma_, m_, delta_;
  double top_ = -std::numeric_limits<double>::infinity();
  double weight_ = 0.0, norms_ = 0.0, last_log_gamma_ = 0.0;
};

/// Least-squares slope of log(gap) against log(N).
inline double rate_slope(std::span<const double> ns, std::span<const double> gaps) {
  if (ns.size() != gaps.size() || ns.size() < 4) throw InvalidInput("rate slope needs >= 4 paired points");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(gaps[i] > 0.0) || !std::isfinite(gaps[i])) throw InvalidInput("rate slope needs positive gaps");
    if (!(ns[i] > 0.0) || (i > 0 && !(ns[i] > ns[i - 1]))) throw InvalidInput("rate slope needs strictly increasing N");
  }
  const double cnt = static_cast<double>(ns.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    mx += std::log(ns[i]);
    my += std::log(gaps[i]);
  }
  mx /= cnt;
  my /= cnt;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double dx = std::log(ns[i]) - mx;
    sxy += dx * (std::log(gaps[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace mirrorvi
