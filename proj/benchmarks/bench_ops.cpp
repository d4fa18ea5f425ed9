#include <benchmark/benchmark.h>

#include "jdatt/autodiff.hpp"
#include "jdatt/rng.hpp"

using namespace jdatt;

namespace {
Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.gauss();
  return t;
}
}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  ad::NoGradGuard ng;
  const ad::Var x = ad::constant(random_tensor({c, hw, hw}, 1));
  const ad::Var w = ad::constant(random_tensor({c, c, 3, 3}, 2));
  const ad::Var b = ad::constant(Tensor({c}));
  for (auto _ : state) {
    auto y = ad::conv2d(x, w, b, 1, 1);
    benchmark::DoNotOptimize(y->value.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c) * c * hw * hw * 9);
}
BENCHMARK(BM_Conv2dForward)->Args({16, 64})->Args({32, 32})->Args({8, 64});

static void BM_Conv2dTrainStep(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  const ad::Var x = ad::constant(random_tensor({c, hw, hw}, 1));
  const ad::Var w = ad::make_param(random_tensor({c, c, 3, 3}, 2));
  const ad::Var b = ad::make_param(Tensor({c}));
  for (auto _ : state) {
    auto loss = ad::mean_all(ad::conv2d(x, w, b, 1, 1));
    ad::backward(loss);
    benchmark::DoNotOptimize(w->grad.data());
    w->grad.fill(0.0);
    b->grad.fill(0.0);
  }
}
BENCHMARK(BM_Conv2dTrainStep)->Args({16, 64})->Args({8, 64});

static void BM_WarpBilinear(benchmark::State& state) {
  ad::NoGradGuard ng;
  const ad::Var img = ad::constant(random_tensor({3, 64, 64}, 3));
  const ad::Var flow = ad::constant(random_tensor({2, 64, 64}, 4));
  for (auto _ : state) {
    auto y = ad::warp_bilinear(img, flow);
    benchmark::DoNotOptimize(y->value.data());
  }
}
BENCHMARK(BM_WarpBilinear);

static void BM_SoftmaxRows(benchmark::State& state) {
  ad::NoGradGuard ng;
  const ad::Var x = ad::constant(random_tensor({64, 4096}, 5));
  for (auto _ : state) {
    auto y = ad::softmax_rows(x);
    benchmark::DoNotOptimize(y->value.data());
  }
}
BENCHMARK(BM_SoftmaxRows);
