#include "otest/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "otest/adversary.hpp"
#include "otest/error.hpp"
#include "otest/rng.hpp"

namespace otest {

namespace {

// Seed streams; rows and realizations are folded into the base seed.
constexpr std::uint64_t kCalibrationTag = 0xca1b;
constexpr std::uint64_t kEstimateTag = 0xe571;
constexpr std::uint64_t kRealizationTag = 0xad5e;

std::uint64_t row_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t row) {
  return derive_seed(base, tag, row);
}

}  // namespace

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

std::size_t count_rejections(const SemilinearTester& tester, const AlternativeModel& source, double k,
                             std::size_t trials, std::uint64_t seed, std::uint64_t stream, SamplingMode mode,
                             std::size_t workers) {
  auto run = [&](std::size_t begin, std::size_t end) {
    std::size_t hits = 0;
    for (std::size_t t = begin; t < end; ++t) {
      Engine rng = make_engine(seed, stream, t);
      if (tester.rejects(tester.statistic(sample(source, k, mode, rng)))) ++hits;
    }
    return hits;
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(trials, 1));
  if (workers == 1) return run(0, trials);

  std::vector<std::size_t> partial(workers, 0);
  std::vector<std::thread> pool;
  const std::size_t chunk = (trials + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(trials, w * chunk), end = std::min(trials, begin + chunk);
    pool.emplace_back([&, w, begin, end] { partial[w] = run(begin, end); });
  }
  for (auto& th : pool) th.join();
  std::size_t total = 0;
  for (auto p : partial) total += p;
  return total;
}

ResultRow estimate_errors(const SemilinearTester& tester, const HypothesisModel& hypothesis,
                          const AlternativeModel& alternative, double k, std::size_t trials, std::uint64_t seed,
                          SamplingMode mode, std::size_t workers) {
  if (!alternative.aligned_with(hypothesis))
    throw Error(ErrorKind::kMisaligned, "alternative does not match hypothesis classes");
  const std::size_t false_rejects =
      count_rejections(tester, as_alternative(hypothesis), k, trials, seed, 0, mode, workers);
  const std::size_t true_rejects = count_rejections(tester, alternative, k, trials, seed, 1, mode, workers);

  ResultRow row;
  row.n = hypothesis.n();
  row.k = k;
  row.tester = tester.name();
  row.trials = trials;
  row.seed = seed;
  row.type1 = static_cast<double>(false_rejects) / static_cast<double>(trials);
  row.type2 = static_cast<double>(trials - true_rejects) / static_cast<double>(trials);
  row.max_err = std::max(row.type1, row.type2);
  row.ci_halfwidth = std::max(wilson_interval(false_rejects, trials).halfwidth(),
                              wilson_interval(trials - true_rejects, trials).halfwidth());
  row.adversary_distance = l1_distance(hypothesis, alternative);
  return row;
}

void ExperimentConfig::validate() const {
  if (trials < 1000) throw Error(ErrorKind::kInvalidInput, "sweep needs at least 1000 trials");
  if (calibrate_trials != 0 && calibrate_trials < 1000)
    throw Error(ErrorKind::kInvalidInput, "calibration needs at least 1000 trials");
  for (double k : k_values)
    if (!(k > 0.0)) throw Error(ErrorKind::kInvalidInput, "k must be positive");
  for (double e : eps_values)
    if (!(e > 0.0)) throw Error(ErrorKind::kEpsOutOfRange, "eps must be positive");
  for (const auto& t : testers)
    if (t != "optimal") parse_baseline_name(t);
  if (source == AdversarySource::kConditional && conditional_count == 0)
    throw Error(ErrorKind::kInvalidInput, "conditional adversary needs at least one realization");
  if (!(eps_hi_factor > 1.0)) throw Error(ErrorKind::kInvalidInput, "eps_hi factor must exceed 1");
  if (workers == 0) throw Error(ErrorKind::kInvalidInput, "workers must be positive");
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepResult result;
  const std::size_t cal_trials = config.calibrate_trials ? config.calibrate_trials : config.trials;
  std::uint64_t row_index = 0;

  for (double k : config.k_values) {
    for (double eps : config.eps_values) {
      if (config.testers.empty()) continue;

      OptimalTesterModel model;
      std::vector<AlternativeModel> alternatives;
      std::vector<double> distances;
      try {
        model = optimize(config.hypothesis, k, eps, config.optimizer);
        const AdversaryModel adv = make_adversary(model, config.eps_hi_factor * eps);
        if (config.source == AdversarySource::kHardQRounded) {
          HardAlternative hard = hard_q_rounded(adv);
          alternatives.push_back(std::move(hard.alternative));
          distances.push_back(hard.distance);
        } else {
          for (std::size_t r = 0; r < config.conditional_count; ++r) {
            const std::uint64_t s = derive_seed(config.seed, kRealizationTag, row_index * 1000003ULL + r);
            CoinRealization real = sample_conditional(adv, s, config.max_attempts);
            alternatives.push_back(std::move(real.alternative));
            distances.push_back(real.distance);
          }
        }
      } catch (const Error& e) {
        for (const auto& t : config.testers) result.failures.push_back({k, eps, t, e.what()});
        row_index += config.testers.size();
        continue;
      }

      for (const auto& name : config.testers) {
        const std::uint64_t row = row_index++;
        try {
          SemilinearTester tester;
          if (name == "optimal") {
            tester = build_optimal_tester(model);
          } else {
            const SemilinearTester raw = baseline(parse_baseline_name(name), config.hypothesis, k);
            tester = calibrate_threshold(raw, config.hypothesis, k, alternatives.front(), cal_trials,
                                         row_seed(config.seed, kCalibrationTag, row), config.mode)
                         .tester;
          }
          const std::uint64_t est_seed = row_seed(config.seed, kEstimateTag, row);

          // type1 is shared; type2 is the worst over the alternatives.
          const std::size_t false_rejects = count_rejections(tester, as_alternative(config.hypothesis), k,
                                                             config.trials, est_seed, 0, config.mode,
                                                             config.workers);
          std::size_t worst_misses = 0, worst = 0;
          for (std::size_t a = 0; a < alternatives.size(); ++a) {
            const std::size_t hits = count_rejections(tester, alternatives[a], k, config.trials, est_seed,
                                                      1 + a, config.mode, config.workers);
            const std::size_t misses = config.trials - hits;
            if (a == 0 || misses > worst_misses) {
              worst_misses = misses;
              worst = a;
            }
          }

          ResultRow out;
          out.n = config.hypothesis.n();
          out.k = k;
          out.eps = eps;
          out.tester = name;
          out.trials = config.trials;
          out.seed = config.seed;
          const double t = static_cast<double>(config.trials);
          out.type1 = static_cast<double>(false_rejects) / t;
          out.type2 = static_cast<double>(worst_misses) / t;
          out.max_err = std::max(out.type1, out.type2);
          out.ci_halfwidth = std::max(wilson_interval(false_rejects, config.trials).halfwidth(),
                                      wilson_interval(worst_misses, config.trials).halfwidth());
          out.adversary_distance = distances[worst];
          result.rows.push_back(std::move(out));
        } catch (const Error& e) {
          result.failures.push_back({k, eps, name, e.what()});
        }
      }
    }
  }
  return result;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

VerifyReport verify_suite(const OptimalTesterModel& model, const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport rep;
  auto below = [&](std::string name, double value, double limit) {
    rep.checks.push_back({std::move(name), value, limit, std::isfinite(value) && std::abs(value) < limit});
  };

  const StationarityReport st = stationarity(model, options.grid_points);
  below("alpha_identity", st.alpha_residual, options.tol);
  double q_worst = 0.0;
  for (double r : st.q_residuals) q_worst = std::max(q_worst, std::isfinite(r) ? std::abs(r) : INFINITY);
  below("q_stationarity", q_worst, options.tol);
  below("u_stationarity", st.u_residual, 10.0 * options.tol);
  below("tangency", std::max(st.tangency_max_violation, 0.0), 1e-8);
  below("tangency_points", st.tangency_point_gap, options.tol);
  rep.checks.push_back({"kappa_convexity", st.kappa_min_second_difference, -1e-12,
                        st.kappa_min_second_difference >= -1e-12});
  below("type1_exponent", st.type1_gap, options.tol);
  below("type2_exponent", st.type2_gap, options.tol);

  const AdversaryModel adv = make_adversary(model);
  const CertificateReport cert = certificate_report(adv, model, options.tol);
  below("certificate", cert.gap, options.tol);
  below("certificate_s_derivative", cert.s_derivative, options.tol);
  below("certificate_u_derivative", cert.u_derivative, options.tol);
  rep.checks.push_back({"certificate_u_minimum", cert.u_probe_rise, 0.0, cert.u_probe_rise > 0.0});
  below("tilted_distance", std::abs(adv.tilted_mean_distance() - model.eps) / model.eps, options.tol);

  if (options.scaling > 1) {
    const double s = static_cast<double>(options.scaling);
    const OptimalTesterModel sub =
        optimize(subdivide(adv.hypothesis(), options.scaling), model.k * s, model.eps, options.optimizer);
    below("subdivision_scaling", (sub.delta_log - s * model.delta_log) / (s * model.delta_log), options.tol);
  }

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace otest
