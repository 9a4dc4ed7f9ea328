#include "otest/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "otest/error.hpp"

namespace otest {

namespace {

constexpr double kMergeRelTol = 1e-12;
constexpr double kMassTol = 1e-9;

}  // namespace

HypothesisModel::HypothesisModel(std::vector<ProbabilityClass> classes) {
  for (const auto& c : classes) {
    if (!(c.y > 0.0) || !std::isfinite(c.y))
      throw Error(ErrorKind::kNonPositiveProbability, "probability " + std::to_string(c.y));
    if (c.count == 0) throw Error(ErrorKind::kInvalidInput, "class with zero count");
  }
  std::sort(classes.begin(), classes.end(),
            [](const ProbabilityClass& a, const ProbabilityClass& b) { return a.y > b.y; });

  double mass = 0.0;
  for (const auto& c : classes) {
    mass += static_cast<double>(c.count) * c.y;
    if (!classes_.empty()) {
      auto& last = classes_.back();
      if (last.y - c.y <= kMergeRelTol * last.y) {
        const double total = static_cast<double>(last.count + c.count);
        last.y = (last.y * static_cast<double>(last.count) + c.y * static_cast<double>(c.count)) / total;
        last.count += c.count;
        n_ += c.count;
        continue;
      }
    }
    classes_.push_back(c);
    n_ += c.count;
  }
  if (std::abs(mass - 1.0) > kMassTol)
    throw Error(ErrorKind::kMassNotOne, "total mass " + std::to_string(mass));
}

std::vector<double> HypothesisModel::expand() const {
  std::vector<double> out;
  out.reserve(n_);
  for (const auto& c : classes_) out.insert(out.end(), c.count, c.y);
  return out;
}

HypothesisModel build_hypothesis(std::span<const double> raw_probabilities) {
  std::vector<ProbabilityClass> classes;
  classes.reserve(raw_probabilities.size());
  for (double p : raw_probabilities) classes.push_back({p, 1});
  return HypothesisModel(std::move(classes));
}

HypothesisModel subdivide(const HypothesisModel& model, std::size_t s) {
  if (s == 0) throw Error(ErrorKind::kInvalidInput, "subdivision factor must be >= 1");
  std::vector<ProbabilityClass> classes;
  for (const auto& c : model.classes())
    classes.push_back({c.y / static_cast<double>(s), c.count * s});
  return HypothesisModel(std::move(classes));
}

HypothesisModel uniform_hypothesis(std::size_t n) {
  return HypothesisModel({{1.0 / static_cast<double>(n), n}});
}

HypothesisModel heavy_element_hypothesis(double heavy, std::size_t n_light) {
  return HypothesisModel({{heavy, 1}, {(1.0 - heavy) / static_cast<double>(n_light), n_light}});
}

double AlternativeModel::mass() const {
  double m = 0.0;
  for (const auto& row : probs)
    for (double x : row) m += x;
  return m;
}

bool AlternativeModel::aligned_with(const HypothesisModel& p) const {
  if (probs.size() != p.num_classes()) return false;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (probs[j].size() != p[j].count) return false;
  return true;
}

AlternativeModel as_alternative(const HypothesisModel& p) {
  AlternativeModel q;
  for (const auto& c : p.classes()) {
    q.class_y.push_back(c.y);
    q.probs.emplace_back(c.count, c.y);
  }
  return q;
}

double l1_distance(const HypothesisModel& p, const AlternativeModel& q) {
  if (!q.aligned_with(p)) throw Error(ErrorKind::kMisaligned, "alternative does not match hypothesis classes");
  double d = 0.0;
  for (std::size_t j = 0; j < q.probs.size(); ++j)
    for (double x : q.probs[j]) d += std::abs(x - p[j].y);
  return d;
}

std::uint64_t SampleHistogram::sum() const {
  std::uint64_t s = 0;
  for (const auto& row : counts)
    for (auto c : row) s += c;
  return s;
}

SampleHistogram zero_histogram(const HypothesisModel& p) {
  SampleHistogram h;
  for (const auto& c : p.classes()) h.counts.emplace_back(c.count, 0u);
  return h;
}

SampleHistogram sample_poissonized(const AlternativeModel& q, double k, Engine& rng) {
  if (!(k > 0.0)) throw Error(ErrorKind::kInvalidInput, "k must be positive");
  SampleHistogram h;
  h.counts.resize(q.probs.size());
  for (std::size_t j = 0; j < q.probs.size(); ++j) {
    h.counts[j].resize(q.probs[j].size());
    for (std::size_t e = 0; e < q.probs[j].size(); ++e) {
      const double rate = k * q.probs[j][e];
      if (rate <= 0.0) continue;
      std::poisson_distribution<std::uint32_t> dist(rate);
      h.counts[j][e] = dist(rng);
    }
  }
  h.total = h.sum();
  return h;
}

SampleHistogram sample_poissonized(const AlternativeModel& q, double k, std::uint64_t seed) {
  Engine rng(seed);
  return sample_poissonized(q, k, rng);
}

SampleHistogram sample_poissonized(const HypothesisModel& p, double k, std::uint64_t seed) {
  return sample_poissonized(as_alternative(p), k, seed);
}

SampleHistogram sample_fixed_k(const AlternativeModel& q, std::uint64_t k, Engine& rng) {
  const double mass = q.mass();
  SampleHistogram h;
  h.renormalized = std::abs(mass - 1.0) > kMassTol;
  h.total = k;
  h.counts.resize(q.probs.size());
  // Sequential conditional binomials give an exact multinomial draw.
  std::uint64_t remaining = k;
  double mass_left = mass;
  for (std::size_t j = 0; j < q.probs.size(); ++j) {
    h.counts[j].assign(q.probs[j].size(), 0u);
    for (std::size_t e = 0; e < q.probs[j].size(); ++e) {
      const double p = q.probs[j][e];
      if (remaining == 0 || p <= 0.0) {
        mass_left -= p;
        continue;
      }
      const double frac = mass_left > 0.0 ? std::min(1.0, p / mass_left) : 1.0;
      std::binomial_distribution<std::uint64_t> dist(remaining, frac);
      const auto c = frac >= 1.0 ? remaining : dist(rng);
      h.counts[j][e] = static_cast<std::uint32_t>(c);
      remaining -= c;
      mass_left -= p;
    }
  }
  if (remaining > 0) {
    // Floating-point residue: assign leftovers to the last positive element.
    for (std::size_t j = q.probs.size(); j-- > 0 && remaining > 0;)
      for (std::size_t e = q.probs[j].size(); e-- > 0;)
        if (q.probs[j][e] > 0.0) {
          h.counts[j][e] += static_cast<std::uint32_t>(remaining);
          remaining = 0;
          break;
        }
  }
  return h;
}

SampleHistogram sample_fixed_k(const AlternativeModel& q, std::uint64_t k, std::uint64_t seed) {
  Engine rng(seed);
  return sample_fixed_k(q, k, rng);
}

SampleHistogram sample_fixed_k(const HypothesisModel& p, std::uint64_t k, std::uint64_t seed) {
  return sample_fixed_k(as_alternative(p), k, seed);
}

SampleHistogram sample(const AlternativeModel& q, double k, SamplingMode mode, Engine& rng) {
  if (mode == SamplingMode::kPoisson) return sample_poissonized(q, k, rng);
  return sample_fixed_k(q, static_cast<std::uint64_t>(std::llround(k)), rng);
}

std::vector<std::vector<std::size_t>> fingerprint(const SampleHistogram& hist) {
  std::vector<std::vector<std::size_t>> f(hist.counts.size());
  for (std::size_t j = 0; j < hist.counts.size(); ++j) {
    for (auto c : hist.counts[j]) {
      if (c >= f[j].size()) f[j].resize(c + 1, 0);
      ++f[j][c];
    }
  }
  return f;
}

}  // namespace otest
