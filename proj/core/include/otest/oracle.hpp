#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "otest/adversary.hpp"
#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"
#include "otest/testers.hpp"

namespace otest {

// Bracket on the probability that a tester rejects.
struct ErrorBracket {
  double lower = 0.0;
  double upper = 1.0;
  double grid_width = 0.0;
  std::size_t bins = 0;
  double discretization_slack = 0.0;  // upper - lower before tail and roundoff terms
  double truncation_slack = 0.0;      // Poisson tail mass counted as reject
  double roundoff_slack = 0.0;

  double width() const { return upper - lower; }
  bool contains(double p, double margin = 0.0) const { return p >= lower - margin && p <= upper + margin; }
};

struct PoissonOracleOptions {
  // 0 picks a starting width from the coefficient scale.
  double grid_width = 0.0;
  double slack_budget = 1e-4;
  double log_tol = kDefaultLogTol;
  std::size_t max_bins = std::size_t{1} << 22;
};

// Pr[tester rejects] when the count of element e of class j is Poisson(rates[j][e]).
ErrorBracket exact_poissonized_error(const SemilinearTester& tester, const std::vector<std::vector<double>>& rates,
                                     const PoissonOracleOptions& options = {});

// Convenience: rates k * probability for every element of `source`.
ErrorBracket exact_poissonized_reject(const SemilinearTester& tester, const AlternativeModel& source, double k,
                                      const PoissonOracleOptions& options = {});

enum class ErrorSide { kType1, kType2 };

inline constexpr double kMaxEnumeration = 1e7;

// Exact probability of rejection with exactly k draws from `source`
// (renormalized when its mass is not 1).
double exact_fixed_k_reject(const SemilinearTester& tester, const AlternativeModel& source, std::uint64_t k);

// Type 1: probability of rejecting. Type 2: probability of accepting.
double exact_fixed_k_error(const SemilinearTester& tester, const AlternativeModel& source, std::uint64_t k,
                           ErrorSide side);

struct TinyInstanceReport {
  double floor = 0.0;          // min over randomized likelihood-ratio tests of max error
  double window_mass = 0.0;    // coin probability of landing in [eps, eps_hi]
  double tester_type1 = 0.0;   // given tester against P
  double tester_type2 = 0.0;   // given tester against the conditioned mixture
  double tester_max() const { return tester_type1 > tester_type2 ? tester_type1 : tester_type2; }
};

// Fixed-k comparison of P against the coin mixture conditioned on its
// distance landing in [eps, eps_hi]. Each realization is renormalized.
TinyInstanceReport tiny_instance_report(const SemilinearTester& tester, const AdversaryModel& adv, std::uint64_t k);

double np_exact_error_tiny(const OptimalTesterModel& model, const AdversaryModel& adv, std::uint64_t k);

// Binomial coefficient as a double.
double choose(std::uint64_t n, std::uint64_t r);

}  // namespace otest
