#include <benchmark/benchmark.h>

#include "hideseek/hsplus.hpp"
#include "hideseek/masking.hpp"
#include "hideseek/metrics.hpp"
#include "hideseek/order_theory.hpp"
#include "hideseek/spectral.hpp"
#include "hideseek/synthetic.hpp"
#include "hideseek/watermark.hpp"

using namespace hideseek;

namespace {

ImageTensor sample_image(int side) {
  Rng rng(static_cast<std::uint64_t>(side));
  ImageTensor img(3, side, side);
  for (double& v : img.values()) v = rng.uniform(0.0, 255.0);
  return img;
}

void BM_Dft2(benchmark::State& state) {
  const ImageTensor img = sample_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dft2(img));
  state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(BM_Dft2)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_Ssim(benchmark::State& state) {
  const ImageTensor a = sample_image(64);
  ImageTensor b = a;
  for (double& v : b.values()) v = std::min(255.0, v + 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_CreateMask(benchmark::State& state) {
  const PatchGrid grid(64, 64, 8);
  const auto kind = static_cast<MaskKind>(state.range(0));
  const double beta = kind == MaskKind::kScattered ? 0.5 : 0.6;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(create_mask(grid, MaskStrategy{kind, beta}, rng));
}
BENCHMARK(BM_CreateMask)
    ->Arg(static_cast<int>(MaskKind::kRandom))
    ->Arg(static_cast<int>(MaskKind::kContinuous))
    ->Arg(static_cast<int>(MaskKind::kScattered));

void BM_SpreadSpectrumRoundTrip(benchmark::State& state) {
  const ImageTensor img = sample_image(64);
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(detect_spread_spectrum(embed_spread_spectrum(img, key), key));
}
BENCHMARK(BM_SpreadSpectrumRoundTrip);

void BM_OrderTheorem(benchmark::State& state) {
  Rng rng(5);
  const OrderInstance inst = OrderInstance::random(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(verify_order_theorem(inst));
}
BENCHMARK(BM_OrderTheorem)->DenseRange(2, 8, 3);

// Full greedy decode of a 32x32 image with roughly half the pixels hidden.
void BM_HsPlusDecode(benchmark::State& state) {
  Rng rng(7);
  RealMap logits(32, 32);
  for (double& v : logits.values) v = rng.normal();
  const FixedLogitMasker masker(logits);
  const MlpPixelGenerator generator(GeneratorArchitecture{}, 5);
  ImageTensor img = sample_image(32);
  for (double& v : img.values()) v = std::round(v);
  for (auto _ : state)
    benchmark::DoNotOptimize(attack_hsplus_detailed(masker, generator, img, HsPlusOptions{}, DecodeMode::argmax()));
}
BENCHMARK(BM_HsPlusDecode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
