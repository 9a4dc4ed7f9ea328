#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "otest/rng.hpp"

namespace otest {

struct ProbabilityClass {
  double y = 0.0;
  std::size_t count = 0;
};

// A distribution stored as distinct probabilities with multiplicities,
// sorted by descending probability.
class HypothesisModel {
 public:
  HypothesisModel() = default;
  // Validates, merges near-equal probabilities and sorts. Throws on
  // non-positive probabilities or total mass away from 1.
  explicit HypothesisModel(std::vector<ProbabilityClass> classes);

  const std::vector<ProbabilityClass>& classes() const { return classes_; }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t n() const { return n_; }
  const ProbabilityClass& operator[](std::size_t j) const { return classes_[j]; }

  // Element-level probabilities, class by class.
  std::vector<double> expand() const;

 private:
  std::vector<ProbabilityClass> classes_;
  std::size_t n_ = 0;
};

HypothesisModel build_hypothesis(std::span<const double> raw_probabilities);
HypothesisModel subdivide(const HypothesisModel& model, std::size_t s);

HypothesisModel uniform_hypothesis(std::size_t n);
// One element of weight `heavy` plus `n_light` elements sharing the rest.
HypothesisModel heavy_element_hypothesis(double heavy, std::size_t n_light);

// Explicit element probabilities aligned to the classes of a hypothesis.
// Mass may differ from 1.
struct AlternativeModel {
  std::vector<double> class_y;
  std::vector<std::vector<double>> probs;

  double mass() const;
  bool aligned_with(const HypothesisModel& p) const;
};

AlternativeModel as_alternative(const HypothesisModel& p);

double l1_distance(const HypothesisModel& p, const AlternativeModel& q);

struct SampleHistogram {
  std::vector<std::vector<std::uint32_t>> counts;
  std::optional<std::uint64_t> total;
  // Set when a fixed-k draw had to renormalize an alternative of mass != 1.
  bool renormalized = false;

  std::uint64_t sum() const;
};

SampleHistogram zero_histogram(const HypothesisModel& p);

SampleHistogram sample_poissonized(const AlternativeModel& q, double k, Engine& rng);
SampleHistogram sample_poissonized(const AlternativeModel& q, double k, std::uint64_t seed);
SampleHistogram sample_poissonized(const HypothesisModel& p, double k, std::uint64_t seed);

SampleHistogram sample_fixed_k(const AlternativeModel& q, std::uint64_t k, Engine& rng);
SampleHistogram sample_fixed_k(const AlternativeModel& q, std::uint64_t k, std::uint64_t seed);
SampleHistogram sample_fixed_k(const HypothesisModel& p, std::uint64_t k, std::uint64_t seed);

enum class SamplingMode { kPoisson, kFixed };

// Poissonized draw with mean k, or exactly round(k) samples.
SampleHistogram sample(const AlternativeModel& q, double k, SamplingMode mode, Engine& rng);

// F[j][i] = number of elements of class j seen exactly i times.
std::vector<std::vector<std::size_t>> fingerprint(const SampleHistogram& hist);

}  // namespace otest
