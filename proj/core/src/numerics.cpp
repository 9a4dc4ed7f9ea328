#include "otest/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "otest/error.hpp"

namespace otest {

namespace {

constexpr std::size_t kFactorialTable = 4096;

const std::array<double, kFactorialTable>& factorial_table() {
  static const auto table = [] {
    std::array<double, kFactorialTable> t{};
    for (std::size_t i = 0; i < kFactorialTable; ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  return table;
}

// ln of the Chernoff bound on Pr[Poi(rate) >= m], valid for m > rate.
double chernoff_upper(double rate, double m) {
  return -(rate - m + m * std::log(m / rate));
}

}  // namespace

double log_factorial(std::size_t i) {
  if (i < kFactorialTable) return factorial_table()[i];
  return std::lgamma(static_cast<double>(i) + 1.0);
}

double log_poisson_pmf(double rate, std::size_t i) {
  if (!(rate >= 0.0)) throw Error(ErrorKind::kInvalidInput, "negative Poisson rate");
  if (rate == 0.0) return i == 0 ? 0.0 : kNegInf;
  return -rate + static_cast<double>(i) * std::log(rate) - log_factorial(i);
}

std::vector<double> log_poisson_row(double rate, std::size_t i_max) {
  std::vector<double> row(i_max + 1);
  for (std::size_t i = 0; i <= i_max; ++i) row[i] = log_poisson_pmf(rate, i);
  return row;
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

double log_poisson_upper_tail(double rate, std::size_t i) {
  if (rate == 0.0) return kNegInf;
  // Terms past the mode decrease geometrically; stop once they no longer matter.
  double acc = kNegInf;
  for (std::size_t j = i + 1;; ++j) {
    const double t = log_poisson_pmf(rate, j);
    acc = log_add_exp(acc, t);
    if (static_cast<double>(j) > rate && t < acc - 40.0) break;
  }
  return acc;
}

TruncationPlan truncation_index(double max_rate, double log_tol) {
  if (!(max_rate >= 0.0)) throw Error(ErrorKind::kInvalidInput, "negative rate in truncation_index");
  if (!(log_tol < 0.0)) throw Error(ErrorKind::kInvalidInput, "log_tol must be negative");
  if (max_rate == 0.0) return {0, kNegInf};

  // Chernoff gives a safe upper index; exact tails then walk it back down.
  std::size_t hi = static_cast<std::size_t>(std::ceil(max_rate)) + 1;
  while (chernoff_upper(max_rate, static_cast<double>(hi + 1)) >= log_tol) hi = hi * 2;
  std::size_t lo = 0;
  // Invariant: tail(hi) < log_tol. Bisect for the smallest such index.
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (log_poisson_upper_tail(max_rate, mid) < log_tol) hi = mid;
    else lo = mid + 1;
  }
  return {hi, log_poisson_upper_tail(max_rate, hi)};
}

double log_poi_ratio(double rate_num, double rate_den, std::size_t i) {
  if (rate_num == 0.0) return i == 0 ? rate_den : kNegInf;
  return (rate_den - rate_num) + static_cast<double>(i) * std::log(rate_num / rate_den);
}

}  // namespace otest
