#include <benchmark/benchmark.h>

#include <vector>

#include "otest/numerics.hpp"
#include "otest/optimizer.hpp"

namespace {

void BM_LogPoissonRow(benchmark::State& state) {
  const auto i_max = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(otest::log_poisson_row(12.5, i_max));
}
BENCHMARK(BM_LogPoissonRow)->Arg(64)->Arg(512);

void BM_LogSumExp(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -0.01 * static_cast<double>(i * i);
  for (auto _ : state) benchmark::DoNotOptimize(otest::log_sum_exp(v));
}
BENCHMARK(BM_LogSumExp)->Arg(128)->Arg(1024);

void BM_ClassTerms(benchmark::State& state) {
  const auto i_max = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(otest::class_terms(0.1, 0.4, 0.03, 0.25, -1.5, 0.46, 10.0, i_max));
}
BENCHMARK(BM_ClassTerms)->Arg(104)->Arg(400);

}  // namespace
