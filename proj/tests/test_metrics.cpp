#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mirrorvi/metrics.hpp"
#include "mirrorvi/solvers.hpp"

using namespace mirrorvi;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VIInstance identity_on_interval() {
  return VIInstance("identity1d", [](const Vector& x) { return x; }, FeasibleSet::box(vec({-1}), vec({1})), 1.0);
}

}  // namespace

TEST(Gap, OneDimensionalClosedForm) {
  const auto inst = identity_on_interval();
  double grid_max = -1.0;
  for (int i = 0; i <= 200000; ++i) {
    const double u = -1.0 + i * 1e-5;
    grid_max = std::max(grid_max, u * (0.5 - u));
  }
  EXPECT_NEAR(grid_max, 1.0 / 16.0, 1e-9);
  const auto est = gap_sampled(vec({0.5}), inst, 5000, 1);
  EXPECT_LE(est.value, 1.0 / 16.0 + 1e-15);
  EXPECT_NEAR(est.value, 1.0 / 16.0, 1e-6);
  EXPECT_NEAR(est.argmax[0], 0.25, 1e-2);
}

TEST(Gap, ZeroOperatorGivesZero) {
  const auto inst = fixedpoint_adapter([](const Vector& x) { return x; }, FeasibleSet::unit_ball(3), 1.0);
  EXPECT_EQ(gap_sampled(vec({0.1, 0.2, 0.3}), inst, 100, 4).value, 0.0);
}

TEST(Gap, AtKnownSolutionIsSmallAndNonNegative) {
  const auto inst = hphard_generate(10, 1, Vector::Zero(10));
  const auto est = gap_sampled(Vector::Zero(10), inst, 2000, 3);
  // <Ku, -u> <= 0 for PSD K, and u = 0 is a candidate.
  EXPECT_EQ(est.value, 0.0);
}

TEST(Gap, DeterministicAndSeedSensitive) {
  const auto inst = example1_2d();
  const Vector x = vec({0.3, -0.2});
  const auto a = gap_sampled(x, inst, 1000, 9);
  const auto b = gap_sampled(x, inst, 1000, 9);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_THROW(gap_sampled(vec({3, 0}), inst, 10, 1), InvalidInput);
}

TEST(Gap, LowerBoundsExactAffineGap) {
  // For F(u) = u on the unit ball, max_u <u, x - u> = |x|^2 / 4 at u = x / 2.
  const auto inst = affine_problem(Matrix::Identity(3, 3), Vector::Zero(3)).instance();
  const Vector x = vec({0.2, -0.4, 0.5});
  const auto est = gap_sampled(x, inst, 3000, 2);
  EXPECT_LE(est.value, x.squaredNorm() / 4.0 + 1e-15);
  EXPECT_NEAR(est.value, x.squaredNorm() / 4.0, 1e-12);  // x/2 is a segment candidate
}

TEST(Residual, Values) {
  const auto inst = example2_3d(1, 1, 1);
  const Vector x1 = benchmark_start(3);
  EXPECT_EQ(residual_metric(x1, inst, x1), 1.0);
  const auto hp = hphard_generate(5, 2, Vector::Zero(5));
  EXPECT_EQ(residual_metric(Vector::Zero(5), hp, benchmark_start(5)), 0.0);
  const auto id = affine_problem(Matrix::Identity(2, 2), Vector::Zero(2)).instance();
  EXPECT_DOUBLE_EQ(residual_metric(vec({0.5, 0}), id, vec({1, 0})), 0.25);
  EXPECT_THROW(residual_metric(vec({0.5, 0}), id, vec({0, 0})), InvalidInput);
}

TEST(Theorem1Rhs, SingleStep) {
  const double g = 0.4, f = 1.7, R = 2.0, sigma = 1.0, delta = 0.01;
  for (double m : {-1.0, 0.0, 1.0, 5.0, 50.0}) {
    const std::vector<double> gs{g}, fs{f};
    EXPECT_NEAR(theorem1_rhs(gs, fs, R, sigma, m, delta), R / g + g * f * f / (2 * sigma) + delta, 1e-12) << m;
  }
}

TEST(Theorem1Rhs, ConstantSteps) {
  const double g = 0.05, L = 3.0, R = 2.0;
  const int N = 400;
  const std::vector<double> gs(N, g), fs(N, L);
  EXPECT_NEAR(theorem1_rhs(gs, fs, R, 1.0, 0.0, 0.0), (R / g + N * g * L * L / 2.0) / N, 1e-12);
  EXPECT_NEAR(theorem1_rhs(gs, fs, R, 1.0, 0.0, 0.5) - theorem1_rhs(gs, fs, R, 1.0, 0.0, 0.0), 0.5, 1e-14);
}

TEST(Theorem1Rhs, StreamingMatchesBatch) {
  std::vector<double> gs, fs;
  for (int k = 1; k <= 3000; ++k) {
    gs.push_back(step_nonadaptive(k, 1.0, 4.0));
    fs.push_back(1.0 + std::sin(k));
  }
  for (double m : {-1.0, 0.0, 1.0, 5.0, 50.0}) {
    Theorem1Bound b(2.0, 1.0, m, 0.0);
    for (std::size_t k = 0; k < gs.size(); ++k) b.add(gs[k], fs[k]);
    const double batch = theorem1_rhs(gs, fs, 2.0, 1.0, m, 0.0);
    EXPECT_NEAR(b.value(), batch, 1e-11 * batch) << m;
  }
}

TEST(RateSlope, PowerLaws) {
  const std::vector<double> ns{100, 316.2, 1000, 3162.3, 10000, 100000};
  std::vector<double> half, one, logs;
  for (double n : ns) {
    half.push_back(3.0 / std::sqrt(n));
    one.push_back(7.0 / n);
    logs.push_back(std::log(n) / std::sqrt(n));
  }
  EXPECT_NEAR(rate_slope(ns, half), -0.5, 1e-12);
  EXPECT_NEAR(rate_slope(ns, one), -1.0, 1e-12);
  const double s = rate_slope(ns, logs);
  EXPECT_GT(s, -0.5);
  EXPECT_LT(s, -0.35);
}

TEST(RateSlope, RejectsBadInput) {
  const std::vector<double> ns{1, 2, 3, 4}, bad{1, 0, 1, 1}, short_ns{1, 2, 3}, short_g{1, 1, 1};
  EXPECT_THROW(rate_slope(ns, bad), InvalidInput);
  EXPECT_THROW(rate_slope(short_ns, short_g), InvalidInput);
  const std::vector<double> unsorted{1, 3, 2, 4}, g{1, 1, 1, 1};
  EXPECT_THROW(rate_slope(unsorted, g), InvalidInput);
}
