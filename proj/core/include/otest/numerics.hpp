#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace otest {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ln(1e-14): default bound on the discarded Poisson tail mass.
inline constexpr double kDefaultLogTol = -32.236191301916641;

// Natural log of i!, via a cached log-gamma table.
double log_factorial(std::size_t i);

// ln Poi(rate, i). rate = 0 is the point mass at 0.
double log_poisson_pmf(double rate, std::size_t i);

// ln poi(rate, i) for i = 0..i_max.
std::vector<double> log_poisson_row(double rate, std::size_t i_max);

double log_add_exp(double a, double b);

// ln sum(e^t); -inf for an empty list or when every term is -inf.
double log_sum_exp(std::span<const double> terms);

// Where to stop a sum over Poisson counts.
struct TruncationPlan {
  std::size_t i_max = 0;
  // ln Pr[Poi(max_rate) > i_max]; -inf when nothing is discarded.
  double tail_log_mass = kNegInf;
};

// Smallest i_max with ln Pr[Poi(max_rate) > i_max] < log_tol.
TruncationPlan truncation_index(double max_rate, double log_tol = kDefaultLogTol);

// ln Pr[Poi(rate) > i] computed by direct summation.
double log_poisson_upper_tail(double rate, std::size_t i);

// ln[poi(rate_num, i) / poi(rate_den, i)] = (rate_den - rate_num) + i ln(rate_num / rate_den).
double log_poi_ratio(double rate_num, double rate_den, std::size_t i);

inline double logistic(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace otest
