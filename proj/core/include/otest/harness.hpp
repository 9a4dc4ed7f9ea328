#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"
#include "otest/testers.hpp"

namespace otest {

struct ResultRow {
  std::size_t n = 0;
  double k = 0.0;
  double eps = 0.0;
  std::string tester;
  double type1 = 0.0;
  double type2 = 0.0;
  double max_err = 0.0;
  double ci_halfwidth = 0.0;  // larger of the two 95% Wilson half-widths
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double adversary_distance = 0.0;
};

struct WilsonInterval {
  double lower = 0.0;
  double upper = 0.0;
  double halfwidth() const { return 0.5 * (upper - lower); }
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

// Number of rejections over `trials` draws from `source`. Trial t uses
// derive_seed(seed, stream, t), so the count does not depend on `workers`.
std::size_t count_rejections(const SemilinearTester& tester, const AlternativeModel& source, double k,
                             std::size_t trials, std::uint64_t seed, std::uint64_t stream, SamplingMode mode,
                             std::size_t workers = 1);

// type1 from draws of the hypothesis (stream 0), type2 from the alternative (stream 1).
ResultRow estimate_errors(const SemilinearTester& tester, const HypothesisModel& hypothesis,
                          const AlternativeModel& alternative, double k, std::size_t trials, std::uint64_t seed,
                          SamplingMode mode = SamplingMode::kPoisson, std::size_t workers = 1);

enum class AdversarySource { kHardQRounded, kConditional };
enum class OutputFormat { kCsv, kJson };

struct ExperimentConfig {
  HypothesisModel hypothesis;
  std::vector<double> k_values;
  std::vector<double> eps_values;
  std::vector<std::string> testers;  // "optimal" and/or baseline names
  std::size_t trials = 1000;
  std::size_t calibrate_trials = 0;  // 0: same as trials
  std::uint64_t seed = 1;
  SamplingMode mode = SamplingMode::kPoisson;
  AdversarySource source = AdversarySource::kHardQRounded;
  std::size_t conditional_count = 1;
  std::size_t max_attempts = 1000000;
  double eps_hi_factor = 1.05;
  std::filesystem::path output;  // empty: stdout
  OutputFormat format = OutputFormat::kCsv;
  std::size_t workers = 1;
  OptimizerOptions optimizer;

  void validate() const;
};

struct SweepFailure {
  double k = 0.0;
  double eps = 0.0;
  std::string tester;
  std::string message;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepFailure> failures;
};

SweepResult run_sweep(const ExperimentConfig& config);

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct VerifyOptions {
  std::size_t grid_points = 2000;
  double tol = 1e-6;
  // Re-optimize the s-fold subdivision and compare against s * delta; 0 skips.
  std::size_t scaling = 0;
  OptimizerOptions optimizer;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  double seconds = 0.0;
  bool passed() const;
};

VerifyReport verify_suite(const OptimalTesterModel& model, const VerifyOptions& options = {});

}  // namespace otest
