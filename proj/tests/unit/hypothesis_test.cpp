#include <gtest/gtest.h>

#include <vector>

#include "otest/error.hpp"
#include "otest/hypothesis.hpp"

using namespace otest;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

}  // namespace

TEST(Hypothesis, MergesDuplicates) {
  const std::vector<double> raw{0.5, 0.5};
  const auto p = build_hypothesis(raw);
  ASSERT_EQ(p.num_classes(), 1u);
  EXPECT_DOUBLE_EQ(p[0].y, 0.5);
  EXPECT_EQ(p[0].count, 2u);
  EXPECT_EQ(p.n(), 2u);
}

TEST(Hypothesis, HeavyElementModel) {
  std::vector<double> raw{0.5};
  raw.insert(raw.end(), 80, 1.0 / 160.0);
  const auto p = build_hypothesis(raw);
  ASSERT_EQ(p.num_classes(), 2u);
  EXPECT_DOUBLE_EQ(p[0].y, 0.5);
  EXPECT_EQ(p[0].count, 1u);
  EXPECT_NEAR(p[1].y, 0.00625, 1e-15);
  EXPECT_EQ(p[1].count, 80u);
  EXPECT_EQ(p.n(), 81u);
  EXPECT_EQ(heavy_element_hypothesis(0.5, 80).n(), 81u);
}

TEST(Hypothesis, Rejections) {
  EXPECT_EQ(kind_of([] { build_hypothesis(std::vector<double>{0.3, 0.8}); }), ErrorKind::kMassNotOne);
  EXPECT_EQ(kind_of([] { build_hypothesis(std::vector<double>{1.0, 0.0}); }), ErrorKind::kNonPositiveProbability);
  EXPECT_EQ(category_of(ErrorKind::kMassNotOne), ErrorCategory::kValidation);
  EXPECT_EQ(exit_code_of(ErrorKind::kMassNotOne), 2);
}

TEST(Hypothesis, Subdivide) {
  const auto u4 = subdivide(uniform_hypothesis(2), 2);
  ASSERT_EQ(u4.num_classes(), 1u);
  EXPECT_DOUBLE_EQ(u4[0].y, 0.25);
  EXPECT_EQ(u4[0].count, 4u);

  const auto same = subdivide(uniform_hypothesis(7), 1);
  EXPECT_EQ(same.n(), 7u);

  const auto fig = subdivide(heavy_element_hypothesis(0.5, 80), 3);
  ASSERT_EQ(fig.num_classes(), 2u);
  EXPECT_NEAR(fig[0].y, 1.0 / 6.0, 1e-15);
  EXPECT_EQ(fig[0].count, 3u);
  EXPECT_NEAR(fig[1].y, 1.0 / 480.0, 1e-15);
  EXPECT_EQ(fig[1].count, 240u);
}

TEST(Hypothesis, L1Distance) {
  const auto p = uniform_hypothesis(2);
  AlternativeModel q{{0.5}, {{1.0, 0.0}}};
  EXPECT_DOUBLE_EQ(l1_distance(p, q), 1.0);
  EXPECT_DOUBLE_EQ(l1_distance(p, as_alternative(p)), 0.0);
  q.probs[0] = {0.9, 0.1};
  EXPECT_NEAR(l1_distance(p, q), 0.8, 1e-15);

  AlternativeModel wrong{{0.5}, {{1.0}}};
  EXPECT_FALSE(wrong.aligned_with(p));
  EXPECT_THROW(l1_distance(p, wrong), Error);
}

TEST(Hypothesis, PoissonizedSampling) {
  AlternativeModel q{{0.5, 0.25}, {{0.5}, {0.0, 0.5}}};
  double mean = 0.0;
  const int trials = 100000;
  Engine rng(7);
  for (int t = 0; t < trials; ++t) {
    const auto h = sample_poissonized(q, 40.0, rng);
    EXPECT_EQ(h.counts[1][0], 0u);
    mean += h.counts[0][0];
  }
  EXPECT_NEAR(mean / trials, 20.0, 0.15);

  const auto a = sample_poissonized(uniform_hypothesis(5), 10.0, 99);
  const auto b = sample_poissonized(uniform_hypothesis(5), 10.0, 99);
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Hypothesis, FixedSampling) {
  const auto p = uniform_hypothesis(2);
  EXPECT_EQ(sample_fixed_k(p, 0, 1).sum(), 0u);
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(sample_fixed_k(heavy_element_hypothesis(0.5, 80), 37, s).sum(), 37u);

  int both_first = 0;
  const int trials = 100000;
  Engine rng(11);
  const auto q = as_alternative(p);
  for (int t = 0; t < trials; ++t)
    if (sample_fixed_k(q, 2, rng).counts[0][0] == 2) ++both_first;
  EXPECT_NEAR(static_cast<double>(both_first) / trials, 0.25, 0.01);
}

TEST(Hypothesis, FixedSamplingRenormalizes) {
  AlternativeModel q{{0.5}, {{0.9, 0.9}}};
  const auto h = sample_fixed_k(q, 5, 3);
  EXPECT_TRUE(h.renormalized);
  EXPECT_EQ(h.sum(), 5u);
}

TEST(Hypothesis, Fingerprint) {
  SampleHistogram h;
  h.counts = {{0, 2, 2}, {1}};
  const auto f = fingerprint(h);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0], (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(f[1], (std::vector<std::size_t>{0, 1}));
}
