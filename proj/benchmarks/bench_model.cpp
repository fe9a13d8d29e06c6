#include <benchmark/benchmark.h>

#include "termcast/attribution.hpp"
#include "termcast/corpus.hpp"
#include "termcast/model.hpp"

using namespace termcast;

namespace {

model::Model default_model() {
  model::ModelConfig cfg;
  cfg.seed = 1;
  return model::init_model(cfg);
}

// Function-local so construction happens after all library statics.
const model::Model& shared_model() {
  static const model::Model m = default_model();
  return m;
}
const model::TokenSequence& shared_seq() {
  static const model::TokenSequence seq =
      model::tokenize(corpus::generate("nested_loops", {{"n", 8}, {"m", 6}}, 5));
  return seq;
}

void BM_Forward(benchmark::State& state) {
  for (auto _ : state) {
    auto result = model::forward(shared_model(), shared_seq().ids);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
  const Eigen::Vector2d dlogits(1.0, -1.0);
  for (auto _ : state) {
    auto grads = model::backward(shared_model(), shared_seq().ids, dlogits);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_Backward);

void BM_AdamWStep(benchmark::State& state) {
  model::Model m = shared_model();
  auto opt = model::init_adamw_state(m.config);
  const auto grads = model::backward(m, shared_seq().ids, Eigen::Vector2d(1.0, -1.0));
  for (auto _ : state) {
    model::adamw_step(m, grads, opt, 3e-4, 0.01);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_AdamWStep);

void BM_ShapleySampled(benchmark::State& state) {
  const auto scorer = attribution::model_scorer(shared_model());
  static const model::TokenSequence seq =
      model::tokenize(corpus::generate("countdown", {{"n", 5}}, 2));
  for (auto _ : state) {
    auto attr = attribution::shapley_sampled(scorer, seq.ids, {}, state.range(0), 7);
    benchmark::DoNotOptimize(attr);
  }
}
BENCHMARK(BM_ShapleySampled)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
