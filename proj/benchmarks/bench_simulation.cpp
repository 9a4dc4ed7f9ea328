#include <benchmark/benchmark.h>

#include "otest/adversary.hpp"
#include "otest/harness.hpp"
#include "otest/oracle.hpp"
#include "otest/testers.hpp"

namespace {

const otest::OptimalTesterModel& model() {
  static const auto m = otest::optimize(otest::uniform_hypothesis(10), 10.0, 0.9);
  return m;
}

void BM_PoissonTrial(benchmark::State& state) {
  const auto t = otest::build_optimal_tester(model());
  const auto q = otest::as_alternative(otest::uniform_hypothesis(10));
  otest::Engine rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(t.statistic(otest::sample(q, 10.0, otest::SamplingMode::kPoisson, rng)));
}
BENCHMARK(BM_PoissonTrial);

void BM_CountRejections(benchmark::State& state) {
  const auto t = otest::build_optimal_tester(model());
  const auto q = otest::hard_q_rounded(otest::make_adversary(model())).alternative;
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        otest::count_rejections(t, q, 10.0, 100000, 3, 1, otest::SamplingMode::kPoisson, workers));
}
BENCHMARK(BM_CountRejections)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PoissonOracle(benchmark::State& state) {
  const auto t = otest::build_optimal_tester(model());
  const auto p = otest::as_alternative(otest::uniform_hypothesis(10));
  for (auto _ : state) benchmark::DoNotOptimize(otest::exact_poissonized_reject(t, p, 10.0));
}
BENCHMARK(BM_PoissonOracle)->Unit(benchmark::kMillisecond);

}  // namespace
