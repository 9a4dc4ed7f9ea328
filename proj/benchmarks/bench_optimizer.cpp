#include <benchmark/benchmark.h>

#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"

namespace {

void BM_InnerMaximize(benchmark::State& state) {
  const auto p = otest::uniform_hypothesis(10);
  const auto plan = otest::working_plan(p, 10.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(otest::inner_maximize(0.1, 10, -1.52, 0.46, 10.0, plan, 1e-10));
}
BENCHMARK(BM_InnerMaximize)->Unit(benchmark::kMillisecond);

void BM_OptimizeUniform(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = otest::uniform_hypothesis(n);
  for (auto _ : state) benchmark::DoNotOptimize(otest::optimize(p, static_cast<double>(n), 0.9));
}
BENCHMARK(BM_OptimizeUniform)->Arg(10)->Arg(50)->Unit(benchmark::kSecond)->Iterations(1);

void BM_OptimizeHeavy(benchmark::State& state) {
  const auto p = otest::heavy_element_hypothesis(0.5, 80);
  for (auto _ : state) benchmark::DoNotOptimize(otest::optimize(p, static_cast<double>(state.range(0)), 0.9));
}
BENCHMARK(BM_OptimizeHeavy)->Arg(40)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
