#include <benchmark/benchmark.h>

#include <vector>

#include "gradstarve/degeneracy.hpp"
#include "gradstarve/evalstats.hpp"
#include "gradstarve/simulator.hpp"
#include "gradstarve/theory.hpp"

using namespace gradstarve;

static void BM_ExpectedCoefficient(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  for (auto _ : state)
    for (Formulation f : kAllFormulations) benchmark::DoNotOptimize(expected_coefficient(f, 0.25, g));
}
BENCHMARK(BM_ExpectedCoefficient)->Arg(4)->Arg(16)->Arg(64);

static void BM_EnumerateAllFail(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  const TabularPolicy policy({0.1, -0.3, 0.7, 0.0, -1.2}, {0, 2});
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_allfail_gradient(policy, g, 1.0));
}
BENCHMARK(BM_EnumerateAllFail)->DenseRange(2, 6);

static void BM_JensenReport(benchmark::State& state) {
  std::vector<PromptProfile> atoms;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < n; ++i)
    atoms.push_back({"x" + std::to_string(i), static_cast<double>(i) / (n - 1), 1.0 / n});
  const PromptDistribution dist(std::move(atoms));
  for (auto _ : state) benchmark::DoNotOptimize(jensen_report(dist, 8));
}
BENCHMARK(BM_JensenReport)->Arg(16)->Arg(1024);

static void BM_RunSim(benchmark::State& state) {
  const auto f = static_cast<Formulation>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_sim(starvation_config(f, 1)));
}
BENCHMARK(BM_RunSim)
    ->Arg(static_cast<int>(Formulation::DrGRPO))
    ->Arg(static_cast<int>(Formulation::Sign))
    ->Unit(benchmark::kMillisecond);

static void BM_ExactPermutation(benchmark::State& state) {
  const std::vector<double> a = {82.18, 81.88, 83.1, 80.9, 82.4, 81.2, 82.9};
  const std::vector<double> b = {84.15, 82.64, 93.63, 85.1, 83.6};
  for (auto _ : state) benchmark::DoNotOptimize(exact_permutation_test(a, b));
}
BENCHMARK(BM_ExactPermutation);

static void BM_MonteCarloPermutation(benchmark::State& state) {
  const std::vector<double> a = {82.18, 81.88, 83.1, 80.9, 82.4, 81.2, 82.9};
  const std::vector<double> b = {84.15, 82.64, 93.63, 85.1, 83.6};
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_permutation_test(a, b, 10'000, 3));
}
BENCHMARK(BM_MonteCarloPermutation);
BENCHMARK_MAIN();
