#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "dreaminsert/compositor.hpp"
#include "dreaminsert/dataset.hpp"
#include "dreaminsert/ddim.hpp"
#include "dreaminsert/embedder.hpp"
#include "dreaminsert/pipeline.hpp"
#include "dreaminsert/pixel_noise.hpp"
#include "dreaminsert/toy_backends.hpp"

namespace di = dreaminsert;

namespace {

di::Frame noise_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  di::Frame f(w, h);
  for (float& v : f.pixels()) v = u(rng);
  return f;
}

di::BinaryMask disc(int n) {
  di::BinaryMask m(n, n);
  const double r = n / 2.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) m.set(x, y, (x + 0.5 - r) * (x + 0.5 - r) + (y + 0.5 - r) * (y + 0.5 - r) <= r * r);
  return m;
}

void BM_ResizeNearest(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const di::BinaryMask m = disc(64);
  for (auto _ : state) benchmark::DoNotOptimize(di::resize_nearest(m, n, n));
}
BENCHMARK(BM_ResizeNearest)->Arg(32)->Arg(256);

void BM_Paste(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const di::Frame obj = noise_frame(32, 32, 1), bg = noise_frame(n, n, 2);
  const di::BinaryMask mask = disc(32);
  const di::BBox box{n / 4, n / 4, n / 3, n / 3};
  for (auto _ : state) benchmark::DoNotOptimize(di::paste(obj, mask, bg, box));
}
BENCHMARK(BM_Paste)->Arg(64)->Arg(256);

void BM_PixelNoise(benchmark::State& state) {
  const di::CaseInputs c = di::make_synthetic_case(0, 16, 64);
  const auto copy = di::make_copy_sequence(c.asset, c.background, c.traj);
  const di::NoiseConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(di::inject_pixel_noise(copy.clip, copy.partitions, cfg));
}
BENCHMARK(BM_PixelNoise);

void BM_DdimStep(benchmark::State& state) {
  di::LinearNoiseBackend be(di::NoiseSchedule::linear_beta(), std::make_unique<di::IdentityCodec>(),
                            di::LinearPredictorParams{});
  const di::LatentClip z(static_cast<std::size_t>(state.range(0)), {3, 64, 64}, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(di::ddim_step(z, 500, {"a ball", std::nullopt}, be));
}
BENCHMARK(BM_DdimStep)->Arg(1)->Arg(16);

void BM_ImageEmbed(benchmark::State& state) {
  const di::ToyEmbedder emb(0);
  const di::Frame f = noise_frame(64, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(emb.image_embed(f));
}
BENCHMARK(BM_ImageEmbed);

void BM_ShortPipeline(benchmark::State& state) {
  const di::CaseInputs c = di::make_synthetic_case(0, 8, 32);
  di::RunConfig cfg;
  cfg.ln.steps = 10;
  cfg.injection.total_steps = 10;
  const di::ToyEmbedder emb(0);
  for (auto _ : state) {
    auto be = di::make_backend(cfg.backend);
    benchmark::DoNotOptimize(di::run_pipeline(c, cfg, *be, emb));
  }
}
BENCHMARK(BM_ShortPipeline)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
