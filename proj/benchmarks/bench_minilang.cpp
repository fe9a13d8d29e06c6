#include <benchmark/benchmark.h>

#include "termcast/corpus.hpp"
#include "termcast/minilang.hpp"
#include "termcast/tokenizer.hpp"

using namespace termcast;

namespace {

// Function-local so construction happens after all library statics.
const std::string& loop_source() {
  static const std::string source =
      corpus::generate("nested_loops", {{"n", 10}, {"m", 10}}, 3);
  return source;
}

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) {
    auto ast = minilang::parse(loop_source());
    benchmark::DoNotOptimize(ast);
  }
}
BENCHMARK(BM_Parse);

void BM_Interpret(benchmark::State& state) {
  const auto ast = minilang::parse(loop_source());
  for (auto _ : state) {
    auto outcome = minilang::interpret(ast, 100000);
    benchmark::DoNotOptimize(outcome);
  }
}
BENCHMARK(BM_Interpret);

void BM_Tokenize(benchmark::State& state) {
  for (auto _ : state) {
    auto seq = model::tokenize(loop_source());
    benchmark::DoNotOptimize(seq);
  }
}
BENCHMARK(BM_Tokenize);

void BM_BuildCorpus(benchmark::State& state) {
  for (auto _ : state) {
    auto corpus_data = corpus::build_corpus(50, 0.1, 2000, 7);
    benchmark::DoNotOptimize(corpus_data);
  }
}
BENCHMARK(BM_BuildCorpus);

}  // namespace

BENCHMARK_MAIN();
