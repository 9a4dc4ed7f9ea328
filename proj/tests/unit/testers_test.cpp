#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "otest/error.hpp"
#include "otest/harness.hpp"
#include "otest/testers.hpp"

using namespace otest;
using otest::testing::uniform10_model;

namespace {

SampleHistogram hist(std::vector<std::vector<std::uint32_t>> counts) {
  SampleHistogram h;
  h.counts = std::move(counts);
  return h;
}

}  // namespace

TEST(Tester, ZeroCoefficients) {
  CoefficientColumn col{0.25, std::vector<double>(5, 0.0), AnalyticColumn{4.0, 0.0, 0.5, 0.25, 0.25}, 1.0};
  const SemilinearTester t("zero", {col}, 0.0, Direction::kGe);
  EXPECT_DOUBLE_EQ(t.statistic(hist({{0, 3, 9, 1000}})), 0.0);
}

TEST(Tester, FingerprintSumMatches) {
  const auto t = build_optimal_tester(uniform10_model());
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto h = sample_poissonized(uniform_hypothesis(10), 10.0, s);
    EXPECT_NEAR(t.statistic(h), t.statistic_from_fingerprint(fingerprint(h)), 1e-9);
  }
}

TEST(Tester, TieRejects) {
  const SemilinearTester t("t", {}, 0.0, Direction::kGe);
  EXPECT_FALSE(t.rejects(-0.1));
  EXPECT_TRUE(t.rejects(0.0));
  EXPECT_TRUE(t.rejects(0.1));
}

TEST(Tester, AnalyticExtensionOnLargeCounts) {
  const auto m = optimize(heavy_element_hypothesis(0.5, 80), 20.0, 0.9);
  const auto t = build_optimal_tester(m);
  auto h = zero_histogram(heavy_element_hypothesis(0.5, 80));
  h.counts[0][0] = 10000;
  EXPECT_TRUE(std::isfinite(t.statistic(h)));
}

TEST(Tester, OptimalColumnsShape) {
  const auto& m = uniform10_model();
  const auto t = build_optimal_tester(m);
  const auto& col = t.columns().at(0);
  const auto& c = m.classes.at(0);

  for (std::size_t i = 0; i + 2 < 200; ++i)
    EXPECT_GE(col(i + 2) - 2.0 * col(i + 1) + col(i), -1e-12) << i;

  const std::size_t far = m.truncation.i_max;
  EXPECT_NEAR(col(far + 1) - col(far), std::log(c.x2 / c.y), 1e-6);
  EXPECT_NEAR(col(3), kappa(c, m.k, 3) + m.shift, 1e-12);

  CoefficientColumn single{c.y, {}, AnalyticColumn{m.k, 0.0, 1.0, c.x1, c.x2}, 1.0};
  for (std::uint64_t i = 0; i < 20; ++i)
    EXPECT_NEAR(single(i + 1) - single(i), std::log(c.x1 / c.y), 1e-12);
}

TEST(Baselines, HandArithmetic) {
  const auto p = uniform_hypothesis(2);
  const auto h = hist({{2, 0}});
  EXPECT_NEAR(baseline(BaselineName::kChiSquared, p, 2.0).statistic(h), 4.0, 1e-12);
  EXPECT_NEAR(baseline(BaselineName::kTotalVariation, p, 2.0).statistic(h), 2.0, 1e-12);
  EXPECT_NEAR(baseline(BaselineName::kCollisions, p, 2.0).statistic(h), 1.0, 1e-12);
  EXPECT_NEAR(baseline(BaselineName::kSingletons, p, 2.0).statistic(hist({{1, 1}})), 2.0, 1e-12);
  EXPECT_EQ(baseline(BaselineName::kSingletons, p, 2.0).direction(), Direction::kLe);
  EXPECT_EQ(parse_baseline_name("tv"), BaselineName::kTotalVariation);
  EXPECT_THROW(parse_baseline_name("gini"), Error);
}

TEST(Calibration, IndistinguishableAlternative) {
  const auto p = uniform_hypothesis(10);
  const auto cal =
      calibrate_threshold(baseline(BaselineName::kChiSquared, p, 10.0), p, 10.0, as_alternative(p), 20000, 4);
  EXPECT_NEAR(cal.max_err(), 0.5, 0.02);
}

TEST(Calibration, NoWorseThanThresholdZero) {
  const auto p = uniform_hypothesis(10);
  const auto q = hard_q_rounded(otest::testing::uniform10_adversary()).alternative;
  const auto raw = baseline(BaselineName::kCollisions, p, 10.0);
  const auto cal = calibrate_threshold(raw, p, 10.0, q, 5000, 9);

  const auto null_stats = sample_statistics(raw, as_alternative(p), 10.0, 5000, 9, 0, SamplingMode::kPoisson);
  const auto alt_stats = sample_statistics(raw, q, 10.0, 5000, 9, 1, SamplingMode::kPoisson);
  double t1 = 0, t2 = 0;
  for (double s : null_stats) t1 += raw.rejects(s);
  for (double s : alt_stats) t2 += !raw.rejects(s);
  EXPECT_LE(cal.max_err(), std::max(t1, t2) / 5000.0 + 1e-12);
}

TEST(Calibration, RequiresEnoughTrials) {
  const auto p = uniform_hypothesis(4);
  EXPECT_THROW(calibrate_threshold(baseline(BaselineName::kTotalVariation, p, 4.0), p, 4.0, as_alternative(p), 100, 1),
               Error);
}
