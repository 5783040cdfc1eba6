// Whole-block and whole-model forward timings at toy widths.

#include <benchmark/benchmark.h>

#include <random>

#include "cosnet/blocks.hpp"
#include "cosnet/model.hpp"
#include "cosnet/ops.hpp"

using namespace cosnet;

namespace {

Tensor random_tensor(const Shape4& shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(size_t(shape.numel()));
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(shape, std::move(v));
}

Model make_model(uint64_t seed) {
  ModelConfig cfg;  // toy defaults
  return build_model(cfg, seed);
}

}  // namespace

static void BM_FsbForward(benchmark::State& state) {
  Model model = make_model(1);
  Tensor x = random_tensor(Shape4{1, model.config.stage_channels[0], 16, 16}, 2);
  const FsbParams& block = model.params.stages[0].blocks[0];
  for (auto _ : state) {
    Tensor y = fsb(x, block);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_FsbForward);

static void BM_BemForward(benchmark::State& state) {
  Model model = make_model(3);
  Tensor f = random_tensor(Shape4{1, model.config.stage_channels[2], 16, 16}, 4);
  for (auto _ : state) {
    Tensor y = bem(f, *model.params.bem);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_BemForward);

static void BM_ModelForward64(benchmark::State& state) {
  Model model = make_model(5);
  Tensor img = random_tensor(Shape4{1, 3, 64, 64}, 6);
  for (auto _ : state) {
    Tensor logits = model_forward(model, img);
    benchmark::DoNotOptimize(logits.values().data());
  }
}
BENCHMARK(BM_ModelForward64)->Unit(benchmark::kMillisecond);

static void BM_ModelForward128(benchmark::State& state) {
  Model model = make_model(7);
  Tensor img = random_tensor(Shape4{1, 3, 128, 128}, 8);
  for (auto _ : state) {
    Tensor logits = model_forward(model, img);
    benchmark::DoNotOptimize(logits.values().data());
  }
}
BENCHMARK(BM_ModelForward128)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  Model model = make_model(9);
  Tensor img = random_tensor(Shape4{1, 3, 64, 64}, 10);
  LabelMap labels(1, 64, 64, 1);
  for (auto _ : state) {
    Tape tape;
    model.store.watch_all(tape);
    Tensor loss = cross_entropy(model_forward(model, img), labels);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
    model.store.clear_grads();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
