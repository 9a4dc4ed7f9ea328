#include "otest/testers.hpp"

#include <algorithm>
#include <cmath>

#include "otest/error.hpp"

namespace otest {

namespace {

double baseline_value(BaselineName name, double k, double y, std::uint64_t i) {
  const double di = static_cast<double>(i);
  switch (name) {
    case BaselineName::kChiSquared: return (di - k * y) * (di - k * y) / y;
    case BaselineName::kTotalVariation: return std::abs(di - k * y);
    case BaselineName::kCollisions: return di * (di - 1.0) / 2.0;
    case BaselineName::kSingletons: return i == 1 ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

BaselineName parse_baseline_name(const std::string& name) {
  if (name == "chisq") return BaselineName::kChiSquared;
  if (name == "tv") return BaselineName::kTotalVariation;
  if (name == "collisions") return BaselineName::kCollisions;
  if (name == "singletons") return BaselineName::kSingletons;
  throw Error(ErrorKind::kUnknownName, "unknown baseline '" + name + "'");
}

std::string to_string(BaselineName name) {
  switch (name) {
    case BaselineName::kChiSquared: return "chisq";
    case BaselineName::kTotalVariation: return "tv";
    case BaselineName::kCollisions: return "collisions";
    case BaselineName::kSingletons: return "singletons";
  }
  return "unknown";
}

std::string to_string(Direction d) { return d == Direction::kGe ? "ge" : "le"; }

Direction parse_direction(const std::string& d) {
  if (d == "ge") return Direction::kGe;
  if (d == "le") return Direction::kLe;
  throw Error(ErrorKind::kUnknownName, "unknown direction '" + d + "'");
}

double CoefficientColumn::operator()(std::uint64_t i) const {
  if (i < table.size()) return table[i];
  return extended(i);
}

double CoefficientColumn::extended(std::uint64_t i) const {
  if (const auto* a = std::get_if<AnalyticColumn>(&extension)) {
    const ClassSolution c{y, 1, a->q, a->x1, a->x2, 0.0, 0.0};
    return scale * (kappa(c, a->k, i) + a->shift);
  }
  const auto& f = std::get<FormulaColumn>(extension);
  return scale * baseline_value(f.name, f.k, y, i);
}

double SemilinearTester::statistic(const SampleHistogram& hist) const {
  if (hist.counts.size() != columns_.size())
    throw Error(ErrorKind::kMisaligned, "histogram has a different number of classes than the tester");
  double s = 0.0;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const auto& col = columns_[j];
    for (auto c : hist.counts[j]) s += c < col.table.size() ? col.table[c] : col.extended(c);
  }
  return s;
}

double SemilinearTester::statistic_from_fingerprint(const std::vector<std::vector<std::size_t>>& f) const {
  if (f.size() != columns_.size())
    throw Error(ErrorKind::kMisaligned, "fingerprint has a different number of classes than the tester");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    for (std::size_t i = 0; i < f[j].size(); ++i)
      if (f[j][i] != 0) s += static_cast<double>(f[j][i]) * columns_[j](i);
  return s;
}

Verdict SemilinearTester::decide(const SampleHistogram& hist) const {
  const double s = statistic(hist);
  return {s, rejects(s)};
}

SemilinearTester SemilinearTester::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw Error(ErrorKind::kInvalidInput, "scale must be positive");
  auto cols = columns_;
  for (auto& c : cols) {
    for (auto& v : c.table) v *= lambda;
    c.scale *= lambda;
  }
  return SemilinearTester(name_, std::move(cols), threshold_ * lambda, direction_);
}

SemilinearTester SemilinearTester::with_threshold(double threshold, Direction direction) const {
  return SemilinearTester(name_, columns_, threshold, direction);
}

SemilinearTester build_optimal_tester(const OptimalTesterModel& model) {
  std::vector<CoefficientColumn> cols;
  for (const auto& c : model.classes) {
    CoefficientColumn col;
    col.y = c.y;
    col.extension = AnalyticColumn{model.k, model.shift, c.q, c.x1, c.x2};
    col.table.resize(model.truncation.i_max + 1);
    for (std::size_t i = 0; i < col.table.size(); ++i) col.table[i] = kappa(c, model.k, i) + model.shift;
    cols.push_back(std::move(col));
  }
  return SemilinearTester("optimal", std::move(cols), 0.0, Direction::kGe);
}

SemilinearTester baseline(BaselineName name, const HypothesisModel& hypothesis, double k) {
  if (!(k > 0.0)) throw Error(ErrorKind::kInvalidInput, "k must be positive");
  const std::size_t i_max = working_plan(hypothesis, k).i_max;
  std::vector<CoefficientColumn> cols;
  for (const auto& c : hypothesis.classes()) {
    CoefficientColumn col;
    col.y = c.y;
    col.extension = FormulaColumn{name, k};
    col.table.resize(i_max + 1);
    for (std::size_t i = 0; i <= i_max; ++i) col.table[i] = baseline_value(name, k, c.y, i);
    cols.push_back(std::move(col));
  }
  const Direction d = name == BaselineName::kSingletons ? Direction::kLe : Direction::kGe;
  return SemilinearTester(to_string(name), std::move(cols), 0.0, d);
}

std::vector<double> sample_statistics(const SemilinearTester& tester, const AlternativeModel& source, double k,
                                      std::size_t trials, std::uint64_t seed, std::uint64_t stream,
                                      SamplingMode mode) {
  std::vector<double> out(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Engine rng = make_engine(seed, stream, t);
    out[t] = tester.statistic(sample(source, k, mode, rng));
  }
  return out;
}

Calibration best_threshold(const SemilinearTester& tester, std::vector<double> null_stats,
                           std::vector<double> alt_stats) {
  std::sort(null_stats.begin(), null_stats.end());
  std::sort(alt_stats.begin(), alt_stats.end());
  std::vector<double> pooled;
  pooled.reserve(null_stats.size() + alt_stats.size());
  std::merge(null_stats.begin(), null_stats.end(), alt_stats.begin(), alt_stats.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  // Cut points: below everything, midpoints, above everything.
  std::vector<double> cuts;
  cuts.reserve(pooled.size() + 1);
  if (pooled.empty()) {
    cuts.push_back(0.0);
  } else {
    cuts.push_back(pooled.front() - 1.0);
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) cuts.push_back(0.5 * (pooled[i] + pooled[i + 1]));
    cuts.push_back(pooled.back() + 1.0);
  }

  const double n0 = static_cast<double>(null_stats.size());
  const double n1 = static_cast<double>(alt_stats.size());
  Calibration best{tester, 1.0, 1.0};
  double best_err = 2.0;
  std::size_t p0 = 0, p1 = 0;
  for (double t : cuts) {
    while (p0 < null_stats.size() && null_stats[p0] < t) ++p0;
    while (p1 < alt_stats.size() && alt_stats[p1] < t) ++p1;
    // Counts strictly below t; no sample equals a cut.
    const double below0 = static_cast<double>(p0) / n0;
    const double below1 = static_cast<double>(p1) / n1;
    const double ge_type1 = 1.0 - below0, ge_type2 = below1;
    const double le_type1 = below0, le_type2 = 1.0 - below1;
    if (std::max(ge_type1, ge_type2) < best_err) {
      best_err = std::max(ge_type1, ge_type2);
      best = {tester.with_threshold(t, Direction::kGe), ge_type1, ge_type2};
    }
    if (std::max(le_type1, le_type2) < best_err) {
      best_err = std::max(le_type1, le_type2);
      best = {tester.with_threshold(t, Direction::kLe), le_type1, le_type2};
    }
  }
  return best;
}

Calibration calibrate_threshold(const SemilinearTester& tester, const HypothesisModel& hypothesis, double k,
                                const AlternativeModel& alternative, std::size_t trials, std::uint64_t seed,
                                SamplingMode mode) {
  if (trials < 1000) throw Error(ErrorKind::kInvalidInput, "calibration needs at least 1000 trials");
  if (!alternative.aligned_with(hypothesis))
    throw Error(ErrorKind::kMisaligned, "alternative does not match hypothesis classes");
  auto null_stats = sample_statistics(tester, as_alternative(hypothesis), k, trials, seed, 0, mode);
  auto alt_stats = sample_statistics(tester, alternative, k, trials, seed, 1, mode);
  return best_threshold(tester, std::move(null_stats), std::move(alt_stats));
}

}  // namespace otest
