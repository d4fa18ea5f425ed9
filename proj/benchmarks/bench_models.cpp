#include <benchmark/benchmark.h>

#include "jdatt/nets.hpp"
#include "jdatt/rng.hpp"

using namespace jdatt;

namespace {
Tensor random_frames(std::vector<int> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

nets::ModelSpec rest_spec(nets::Variant v, int channels, int depth) {
  nets::ModelSpec s;
  s.kind = nets::ModelKind::restoration;
  s.variant = v;
  s.base_channels = channels;
  s.depth = depth;
  return s;
}

nets::ModelSpec det_spec(nets::Variant v, int channels, int depth) {
  nets::ModelSpec s;
  s.kind = nets::ModelKind::detector;
  s.variant = v;
  s.base_channels = channels;
  s.depth = depth;
  s.num_classes = 3;
  return s;
}
}  // namespace

static void BM_RestorationForward(benchmark::State& state) {
  const auto variant = state.range(0) == 0 ? nets::Variant::teacher : nets::Variant::small;
  const int channels = variant == nets::Variant::teacher ? 12 : 6;
  nets::RestorationModel model(rest_spec(variant, channels, variant == nets::Variant::teacher ? 2 : 1), 7);
  const ad::Var win = ad::constant(random_frames({15, 64, 64}, 11));
  ad::NoGradGuard ng;
  for (auto _ : state) {
    auto fwd = model.forward(win);
    benchmark::DoNotOptimize(fwd.output->value.data());
  }
}
BENCHMARK(BM_RestorationForward)->Arg(0)->Arg(1);

static void BM_DetectorForward(benchmark::State& state) {
  const auto variant = state.range(0) == 0 ? nets::Variant::teacher : nets::Variant::small;
  const int channels = variant == nets::Variant::teacher ? 16 : 8;
  nets::DetectorModel model(det_spec(variant, channels, variant == nets::Variant::teacher ? 2 : 1), 7);
  const ad::Var frame = ad::constant(random_frames({3, 64, 64}, 12));
  ad::NoGradGuard ng;
  for (auto _ : state) {
    auto fwd = model.forward(frame);
    benchmark::DoNotOptimize(fwd.logits_rows->value.data());
  }
}
BENCHMARK(BM_DetectorForward)->Arg(0)->Arg(1);
