#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"

namespace otest {

struct AdversaryClass {
  double y = 0.0;
  std::size_t h = 0;
  double q = 0.5;
  double q_tilde = 0.5;
  double x1 = 0.0;
  double x2 = 0.0;
};

struct AdversaryModel {
  double eps = 0.0;
  double eps_hi = 0.0;
  std::vector<AdversaryClass> classes;

  // Expected l1 distance under the tilted weights; equals eps at an optimum.
  double tilted_mean_distance() const;
  // Expected l1 distance under the coin weights.
  double coin_mean_distance() const;
  HypothesisModel hypothesis() const;
};

inline constexpr double kDefaultEpsHiFactor = 1.05;

AdversaryModel make_adversary(const OptimalTesterModel& model, double eps_hi);
inline AdversaryModel make_adversary(const OptimalTesterModel& model) {
  return make_adversary(model, kDefaultEpsHiFactor * model.eps);
}

struct CoinRealization {
  // choice[j][e] is 1 for the lower point x1, 2 for the upper point x2.
  std::vector<std::vector<std::uint8_t>> choice;
  AlternativeModel alternative;
  double distance = 0.0;
};

CoinRealization realize(const AdversaryModel& adv, std::vector<std::vector<std::uint8_t>> choice);

CoinRealization sample_coin_distribution(const AdversaryModel& adv, Engine& rng);
CoinRealization sample_coin_distribution(const AdversaryModel& adv, std::uint64_t seed);

// Rejection sampling until the distance lands in [eps, eps_hi].
CoinRealization sample_conditional(const AdversaryModel& adv, std::uint64_t seed, std::size_t max_attempts,
                                   std::size_t* attempts_used = nullptr);

struct HardAlternative {
  AlternativeModel alternative;
  std::vector<std::size_t> at_lower;  // per class, elements placed at x1
  double distance = 0.0;
  double mass = 0.0;
  double slack = 0.0;  // distance - eps
};

// Integer rounding of the tilted histogram, nudged until the distance
// reaches eps.
HardAlternative hard_q_rounded(const AdversaryModel& adv);

double log_likelihood_ratio(const AdversaryModel& adv, const OptimalTesterModel& model, const SampleHistogram& hist);

// Natural log of the coin weight pi for branch r (1 or 2) of class j.
double log_pi_weight(const OptimalTesterModel& model, std::size_t j, int r, double u);
double pi_weight(const AdversaryModel& adv, const OptimalTesterModel& model, std::size_t j, int r);

double level2_chernoff(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param);
double level2_chernoff(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param, double u);

// The lower-bound exponent at (s, u); equals delta_log at s = 0 and the
// model's u.
double certificate_value(const AdversaryModel& adv, const OptimalTesterModel& model, double s_param, double u);

struct CertificateReport {
  double value = 0.0;
  double delta_log = 0.0;
  double gap = 0.0;
  double s_derivative = 0.0;
  double u_derivative = 0.0;
  double u_probe_rise = 0.0;  // value(u + 0.05) - value(u)
  bool passed = false;
};

CertificateReport certificate_report(const AdversaryModel& adv, const OptimalTesterModel& model, double tol = 1e-6);
// Throws CertificateMismatch when the report fails.
CertificateReport certificate_check(const AdversaryModel& adv, const OptimalTesterModel& model, double tol = 1e-6);

}  // namespace otest
