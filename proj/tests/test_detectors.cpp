#include <cmath>

#include <gtest/gtest.h>

#include "phnls/detectors.hpp"

using namespace phnls;

namespace {

std::vector<TraceRow> rows_from(const std::vector<double>& t, auto grad) {
  std::vector<TraceRow> out;
  for (double s : t) {
    TraceRow r;
    r.t = s;
    r.grad_x_sq = grad(s);
    r.dy_sq = 1.0;
    r.Q = r.grad_x_sq;
    r.lp_alpha_plus_2 = 1.0;
    out.push_back(r);
  }
  return out;
}

std::vector<double> times(double t0, double t1, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(t0 + (t1 - t0) * i / n);
  return t;
}

}  // namespace

TEST(Blowup, PowerLawIsExtrapolated) {
  const auto rows = rows_from(times(0.0, 0.99, 99), [](double t) { return std::pow(1.0 - t, -2.0) - 1.0; });
  const auto b = detect_blowup(rows, 100.0);
  ASSERT_TRUE(b.fired);
  ASSERT_TRUE(b.t_est);
  EXPECT_NEAR(*b.t_est, 1.0, 2e-2);
  EXPECT_GT(b.growth_ratio, 100.0);
}

TEST(Blowup, SlowGrowthDoesNotFire) {
  const auto rows = rows_from(times(0.0, 50.0, 200), [](double t) { return t; });
  const auto b = detect_blowup(rows, 100.0);
  EXPECT_FALSE(b.fired);
  EXPECT_FALSE(b.t_est);
  EXPECT_NEAR(b.growth_ratio, 51.0, 1e-9);
}

TEST(Blowup, DecayingPeakDoesNotFire) {
  // a lone sample over the factor against a falling five-sample trend
  auto rows = rows_from(times(0.0, 1.0, 10), [](double) { return 0.0; });
  const std::vector<double> g{1, 99.9, 99.9, 99.9, 99.9, 99.9, 99.5, 99.0, 100.1, 95, 90};
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].grad_x_sq = g[i] - 1.0;
  EXPECT_FALSE(detect_blowup(rows, 100.0).fired);
  rows[9].grad_x_sq = 120.0;
  EXPECT_TRUE(detect_blowup(rows, 100.0).fired);
}

TEST(Blowup, UnderflowFiresWithFallbackTime) {
  const auto rows = rows_from(times(0.0, 1.0, 10), [](double) { return 1.0; });
  const auto b = detect_blowup(rows, 100.0, true, 0.97);
  EXPECT_TRUE(b.fired);
  ASSERT_TRUE(b.t_est);
  EXPECT_EQ(*b.t_est, 0.97);
  EXPECT_FALSE(detect_blowup({}, 100.0).fired);
}

TEST(Cauchy, DyadicTimes) {
  const std::vector<double> want{1.0, 2.0, 4.0, 8.0};
  EXPECT_EQ(dyadic_times(8.0, 3), want);
}

TEST(Cauchy, DecreasingDeltas) {
  EXPECT_TRUE(deltas_decreasing({3.0, 2.0, 1.0}, 0.0));
  EXPECT_FALSE(deltas_decreasing({3.0, 3.0, 1.0}, 0.0));
  EXPECT_FALSE(deltas_decreasing({1.0, 2.0}, 0.0));
  // noise below the floor is not held against the run
  EXPECT_TRUE(deltas_decreasing({1e-3, 1e-12, 2e-12}, 1e-10));
}

TEST(ScatterProxy, ConditionsAreAllRequired) {
  auto rows = rows_from(times(0.0, 10.0, 10), [](double) { return 1.0; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].lp_alpha_plus_2 = std::pow(10.0, -double(i) / 2.0);
  const ScatterProxyConfig cfg;
  const auto ev = detect_scatter_proxy(rows, {}, cfg);
  EXPECT_TRUE(ev.potential_decayed);
  EXPECT_NEAR(ev.potential_decay_ratio, 1e5, 1e-6);
  EXPECT_TRUE(ev.q_ratio_near_one);
  EXPECT_TRUE(ev.boundary_clean);
  // no Cauchy snapshots: never fires
  EXPECT_FALSE(ev.cauchy_decreasing);
  EXPECT_FALSE(ev.fired);
  EXPECT_FALSE(detect_scatter_proxy(rows, {}, cfg, true).boundary_clean);

  auto bounded = rows;
  for (auto& r : bounded) r.lp_alpha_plus_2 = 1.0;
  EXPECT_FALSE(detect_scatter_proxy(bounded, {}, cfg).potential_decayed);

  auto focusing = rows;
  focusing.back().Q = 0.5 * focusing.back().grad_x_sq;
  EXPECT_FALSE(detect_scatter_proxy(focusing, {}, cfg).q_ratio_near_one);

  auto leaky = rows;
  leaky[3].boundary_mass = 1e-3;
  EXPECT_FALSE(detect_scatter_proxy(leaky, {}, cfg).boundary_clean);
}

TEST(CriterionNorm, ConstantAndInterpolated) {
  auto rows = rows_from(times(0.0, 4.0, 8), [](double) { return 1.0; });
  for (auto& r : rows) r.criterion_norm = 2.0;
  const double q = 70.0 / 9.0;
  EXPECT_NEAR(criterion_norm(rows, 0.0, 4.0, q), 2.0 * std::pow(4.0, 1.0 / q), 1e-13);
  EXPECT_NEAR(criterion_norm(rows, 0.3, 1.1, q), 2.0 * std::pow(0.8, 1.0 / q), 1e-13);

  std::vector<TraceRow> two(2);
  two[1].t = 1.0;
  two[0].criterion_norm = 0.0;
  two[1].criterion_norm = 1.0;
  // integrand t on [0,1] with q = 1
  EXPECT_NEAR(criterion_norm(two, 0.25, 0.75, 1.0), 0.25, 1e-15);

  EXPECT_THROW((void)criterion_norm(rows, -1.0, 1.0, q), InvalidArgument);
  EXPECT_THROW((void)criterion_norm(rows, 1.0, 5.0, q), InvalidArgument);
  EXPECT_THROW((void)criterion_norm(rows, 1.0, 1.0, q), InvalidArgument);
  EXPECT_THROW((void)criterion_norm({rows[0]}, 0.0, 1.0, q), InvalidArgument);
}

TEST(CriterionNorm, ZeroTrace) {
  auto rows = rows_from(times(0.0, 1.0, 4), [](double) { return 0.0; });
  EXPECT_EQ(criterion_norm(rows, 0.0, 1.0, 7.0), 0.0);
}
