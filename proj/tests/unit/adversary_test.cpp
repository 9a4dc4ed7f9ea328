#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "otest/adversary.hpp"
#include "otest/error.hpp"
#include "otest/testers.hpp"

using namespace otest;
using otest::testing::uniform10_adversary;
using otest::testing::uniform10_model;

TEST(Adversary, TiltedMeanIsEps) {
  EXPECT_NEAR(uniform10_adversary().tilted_mean_distance(), 0.9, 1e-8);
  EXPECT_DOUBLE_EQ(uniform10_adversary().eps_hi, 1.05 * 0.9);
}

TEST(Adversary, AllLowerBranch) {
  AdversaryModel adv = uniform10_adversary();
  for (auto& c : adv.classes) c.q = 1.0;
  const auto r = sample_coin_distribution(adv, 5);
  double expected = 0.0;
  for (const auto& c : adv.classes) expected += c.h * (c.y - c.x1);
  EXPECT_NEAR(r.distance, expected, 1e-12);
}

TEST(Adversary, CoinMeanDistance) {
  const auto& adv = uniform10_adversary();
  const int trials = 100000;
  double sum = 0.0, sum2 = 0.0;
  Engine rng(17);
  for (int t = 0; t < trials; ++t) {
    const double d = sample_coin_distribution(adv, rng).distance;
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sum2 / trials - mean * mean);
  EXPECT_NEAR(mean, adv.coin_mean_distance(), 3.0 * sd / std::sqrt(trials));
}

TEST(Adversary, ConditionalSampling) {
  const auto& adv = uniform10_adversary();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = sample_conditional(adv, s, 100000);
    EXPECT_GE(r.distance, adv.eps - 1e-12);
    EXPECT_LE(r.distance, adv.eps_hi + 1e-12);
  }

  AdversaryModel pinned = adv;
  pinned.eps_hi = pinned.eps;
  try {
    sample_conditional(pinned, 1, 2000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConditioningTooRare);
  }
}

TEST(Adversary, HeavyConditionalSucceeds) {
  const auto m = optimize(heavy_element_hypothesis(0.5, 80), 40.0, 0.9);
  const auto adv = make_adversary(m);
  std::size_t used = 0;
  const auto r = sample_conditional(adv, 3, 100000, &used);
  EXPECT_LE(used, 100000u);
  EXPECT_GE(r.distance, 0.9);
}

TEST(Adversary, HardQRounded) {
  const auto hard = hard_q_rounded(uniform10_adversary());
  EXPECT_GE(hard.distance, 0.9);
  EXPECT_NEAR(hard.slack, hard.distance - 0.9, 1e-15);
  EXPECT_NEAR(l1_distance(uniform_hypothesis(10), hard.alternative), hard.distance, 1e-12);
}

TEST(LikelihoodRatio, MatchesTesterStatistic) {
  const auto& m = uniform10_model();
  const auto& adv = uniform10_adversary();
  const auto t = build_optimal_tester(m);
  const double ns = static_cast<double>(m.n()) * m.shift;

  const auto empty = zero_histogram(uniform_hypothesis(10));
  EXPECT_NEAR(log_likelihood_ratio(adv, m, empty), 10.0 * kappa(m.classes[0], m.k, 0), 1e-12);

  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto h = sample_poissonized(uniform_hypothesis(10), 10.0, s);
    const double llr = log_likelihood_ratio(adv, m, h);
    const double stat = t.statistic(h);
    EXPECT_NEAR(llr, stat - ns, 1e-9);
    if (std::abs(stat) > 1e-9) EXPECT_EQ(llr >= -ns, t.rejects(stat));
  }
}

TEST(PiWeights, Degenerate) {
  OptimalTesterModel m = uniform10_model();
  for (int r : {1, 2}) {
    const double q = r == 1 ? m.classes[0].q : 1.0 - m.classes[0].q;
    EXPECT_NEAR(std::exp(log_pi_weight(m, 0, r, 0.0)), q, 1e-12);
  }
  m.classes[0].x1 = m.classes[0].x2 = m.classes[0].y;
  EXPECT_NEAR(std::exp(log_pi_weight(m, 0, 1, m.u)), m.classes[0].q, 1e-12);
}

TEST(PiWeights, DecompositionByDirectSum) {
  const auto& m = uniform10_model();
  const auto& c = m.classes[0];
  // sum_i poi(ky,i)^u * [q poi(kx1,i) + (1-q) poi(kx2,i)]^(1-u)
  double direct = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const double p = std::exp(log_poisson_pmf(m.k * c.y, i));
    const double mix = c.q * std::exp(log_poisson_pmf(m.k * c.x1, i)) +
                       (1.0 - c.q) * std::exp(log_poisson_pmf(m.k * c.x2, i));
    direct += std::pow(p, m.u) * std::pow(mix, 1.0 - m.u);
  }
  const double pis = std::exp(log_pi_weight(m, 0, 1, m.u)) + std::exp(log_pi_weight(m, 0, 2, m.u));
  EXPECT_NEAR(direct, pis, 1e-12);
  EXPECT_NEAR(std::exp(level2_chernoff(uniform10_adversary(), m, 0.0) / 10.0), pis, 1e-12);
}

TEST(Level2, StationaryAndConvexInS) {
  const auto& m = uniform10_model();
  const auto& adv = uniform10_adversary();
  const double h = 1e-5;
  EXPECT_NEAR((level2_chernoff(adv, m, h) - level2_chernoff(adv, m, -h)) / (2 * h), 0.0, 1e-6);
  for (double s = -1.0; s < 1.0; s += 0.05)
    EXPECT_GE(level2_chernoff(adv, m, s + 0.05) - 2 * level2_chernoff(adv, m, s) + level2_chernoff(adv, m, s - 0.05),
              -1e-12);
}

TEST(Certificate, EqualsDelta) {
  const auto& m = uniform10_model();
  const auto rep = certificate_check(uniform10_adversary(), m);
  EXPECT_LT(rep.gap, 1e-6);
  EXPECT_LT(std::abs(rep.s_derivative), 1e-6);
  EXPECT_GT(rep.u_probe_rise, 0.0);
}
