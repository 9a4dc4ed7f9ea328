#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"

namespace otest {

enum class Direction { kGe, kLe };

enum class BaselineName { kChiSquared, kTotalVariation, kCollisions, kSingletons };

BaselineName parse_baseline_name(const std::string& name);
std::string to_string(BaselineName name);
std::string to_string(Direction d);
Direction parse_direction(const std::string& d);

// Coefficients of the optimal tester past the table: kappa(i) + shift.
struct AnalyticColumn {
  double k = 0.0;
  double shift = 0.0;
  double q = 0.5;
  double x1 = 0.0;
  double x2 = 0.0;
};

struct FormulaColumn {
  BaselineName name = BaselineName::kChiSquared;
  double k = 0.0;
};

struct CoefficientColumn {
  double y = 0.0;
  std::vector<double> table;
  std::variant<AnalyticColumn, FormulaColumn> extension;
  double scale = 1.0;

  double operator()(std::uint64_t i) const;
  // Ignores the table and evaluates the extension rule.
  double extended(std::uint64_t i) const;
};

struct Verdict {
  double statistic = 0.0;
  bool reject = false;
};

class SemilinearTester {
 public:
  SemilinearTester() = default;
  SemilinearTester(std::string name, std::vector<CoefficientColumn> columns, double threshold, Direction direction)
      : name_(std::move(name)), columns_(std::move(columns)), threshold_(threshold), direction_(direction) {}

  const std::string& name() const { return name_; }
  const std::vector<CoefficientColumn>& columns() const { return columns_; }
  double threshold() const { return threshold_; }
  Direction direction() const { return direction_; }

  double coefficient(std::size_t j, std::uint64_t i) const { return columns_[j](i); }

  double statistic(const SampleHistogram& hist) const;
  // Same sum written over the fingerprint.
  double statistic_from_fingerprint(const std::vector<std::vector<std::size_t>>& f) const;
  // A tie with the threshold rejects.
  bool rejects(double statistic) const {
    return direction_ == Direction::kGe ? statistic >= threshold_ : statistic <= threshold_;
  }
  Verdict decide(const SampleHistogram& hist) const;

  SemilinearTester scaled(double lambda) const;
  SemilinearTester with_threshold(double threshold, Direction direction) const;

 private:
  std::string name_;
  std::vector<CoefficientColumn> columns_;
  double threshold_ = 0.0;
  Direction direction_ = Direction::kGe;
};

SemilinearTester build_optimal_tester(const OptimalTesterModel& model);

// Uncalibrated: threshold 0, reject-if-ge except singletons (reject-if-le).
SemilinearTester baseline(BaselineName name, const HypothesisModel& hypothesis, double k);

struct Calibration {
  SemilinearTester tester;
  double type1 = 0.0;
  double type2 = 0.0;
  double max_err() const { return type1 > type2 ? type1 : type2; }
};

// Statistics of `trials` draws; trial t uses the engine derive_seed(seed, stream, t).
std::vector<double> sample_statistics(const SemilinearTester& tester, const AlternativeModel& source, double k,
                                      std::size_t trials, std::uint64_t seed, std::uint64_t stream,
                                      SamplingMode mode);

// Picks the cut between sorted pooled statistics and the direction that
// minimize the larger empirical error.
Calibration best_threshold(const SemilinearTester& tester, std::vector<double> null_stats,
                           std::vector<double> alt_stats);

Calibration calibrate_threshold(const SemilinearTester& tester, const HypothesisModel& hypothesis, double k,
                                const AlternativeModel& alternative, std::size_t trials, std::uint64_t seed,
                                SamplingMode mode = SamplingMode::kPoisson);

}  // namespace otest
