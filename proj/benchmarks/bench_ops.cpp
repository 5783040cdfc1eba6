// Microbenchmarks for the dense kernels the forward pass spends its time in.

#include <benchmark/benchmark.h>

#include <random>

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

}  // namespace

static void BM_Conv3x3(benchmark::State& state) {
  const int c = int(state.range(0));
  Tensor x = random_tensor(Shape4{1, c, 64, 64}, 1);
  Tensor w = random_tensor(Shape4{c, c, 3, 3}, 2);
  for (auto _ : state) {
    Tensor y = conv2d(x, w, ConvSpec::padded(1));
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(c) * c * 9 * 64 * 64);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(32);

static void BM_Conv1x1(benchmark::State& state) {
  const int c = int(state.range(0));
  Tensor x = random_tensor(Shape4{1, c, 64, 64}, 3);
  Tensor w = random_tensor(Shape4{c, c, 1, 1}, 4);
  for (auto _ : state) {
    Tensor y = conv2d(x, w);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(c) * c * 64 * 64);
}
BENCHMARK(BM_Conv1x1)->Arg(32)->Arg(64);

static void BM_ConvDepthwise3x3(benchmark::State& state) {
  const int c = int(state.range(0));
  Tensor x = random_tensor(Shape4{1, c, 64, 64}, 5);
  Tensor w = random_tensor(Shape4{c, 1, 3, 3}, 6);
  ConvSpec spec = ConvSpec::padded(1).with_groups(c);
  for (auto _ : state) {
    Tensor y = conv2d(x, w, spec);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_ConvDepthwise3x3)->Arg(32)->Arg(64);

static void BM_ConvDilatedGrouped(benchmark::State& state) {
  const int c = 32;
  Tensor x = random_tensor(Shape4{1, c, 64, 64}, 7);
  Tensor w = random_tensor(Shape4{c, c / 2, 3, 3}, 8);
  ConvSpec spec = ConvSpec::padded(3).with_dilation(3).with_groups(2);
  for (auto _ : state) {
    Tensor y = conv2d(x, w, spec);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_ConvDilatedGrouped);

static void BM_BilinearUpsample(benchmark::State& state) {
  Tensor x = random_tensor(Shape4{1, 32, 32, 32}, 9);
  for (auto _ : state) {
    Tensor y = bilinear_upsample(x, 128, 128);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_BilinearUpsample);

static void BM_GroupNorm(benchmark::State& state) {
  Tensor x = random_tensor(Shape4{1, 32, 64, 64}, 10);
  Tensor gamma = Tensor::full(Shape4::of({32}), 1.0);
  Tensor beta = Tensor::zeros(Shape4::of({32}));
  for (auto _ : state) {
    Tensor y = group_norm(x, 8, gamma, beta);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_GroupNorm);

BENCHMARK_MAIN();
