#include <benchmark/benchmark.h>

#include "jdatt/evalkit.hpp"
#include "jdatt/rng.hpp"

using namespace jdatt;

namespace {
Tensor random_frame(uint64_t seed) {
  Tensor t({3, 64, 64});
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}
}  // namespace

static void BM_Psnr(benchmark::State& state) {
  const Tensor a = random_frame(1), b = random_frame(2);
  for (auto _ : state) {
    auto r = evalkit::psnr(a, b);
    benchmark::DoNotOptimize(r.db);
  }
}
BENCHMARK(BM_Psnr);

static void BM_Ssim(benchmark::State& state) {
  const Tensor a = random_frame(1), b = random_frame(2);
  for (auto _ : state) {
    double v = evalkit::ssim(a, b);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_Ssim);

static void BM_Map5095(benchmark::State& state) {
  Rng rng(3);
  std::vector<DetectionSet> preds(20), gts(20);
  for (int f = 0; f < 20; ++f) {
    gts[f].frame_index = f;
    preds[f].frame_index = f;
    for (int i = 0; i < 4; ++i) {
      Box b{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)};
      gts[f].boxes.push_back(b);
      gts[f].labels.push_back(static_cast<int>(rng.uniform_int(3)));
      Box p = b;
      p.cx += rng.gauss(0, 0.02);
      p.cy += rng.gauss(0, 0.02);
      preds[f].boxes.push_back(p);
      preds[f].labels.push_back(gts[f].labels.back());
      preds[f].scores.push_back(rng.uniform());
    }
  }
  for (auto _ : state) {
    double v = evalkit::map_50_95(preds, gts, 3);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_Map5095);
