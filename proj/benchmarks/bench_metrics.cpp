#include <benchmark/benchmark.h>

#include <vector>

#include "termcast/metrics.hpp"
#include "termcast/rng.hpp"

using namespace termcast;

namespace {

std::pair<std::vector<double>, std::vector<int>> dataset(int n) {
  Rng rng(9);
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] = rng.next_double();
    labels[static_cast<std::size_t>(i)] = rng.chance(0.05) ? 1 : 0;
  }
  labels[0] = 1;
  labels[static_cast<std::size_t>(n - 1)] = 0;
  return {scores, labels};
}

void BM_RocAuc(benchmark::State& state) {
  auto [scores, labels] = dataset(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::roc_auc(scores, labels));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->Range(1 << 10, 1 << 16)->Complexity();

void BM_AveragePrecision(benchmark::State& state) {
  auto [scores, labels] = dataset(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::average_precision(scores, labels, 1));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AveragePrecision)->Range(1 << 10, 1 << 16)->Complexity();

}  // namespace

BENCHMARK_MAIN();
