#include <benchmark/benchmark.h>

#include "loopcompat/audio/resample.hpp"
#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/audio/stretch.hpp"
#include "loopcompat/random.hpp"

namespace {

using loopcompat::audio::AudioClip;

AudioClip noise(double seconds, int rate = loopcompat::audio::kCanonicalRate) {
  loopcompat::Rng rng(1);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (double& s : clip.samples) s = rng.uniform(-0.5, 0.5);
  return clip;
}

void BM_Stft(benchmark::State& state) {
  const AudioClip clip = noise(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::audio::stft(clip));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_LoopFeatures(benchmark::State& state) {
  const AudioClip clip = noise(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::audio::loop_features(clip));
}
BENCHMARK(BM_LoopFeatures)->Unit(benchmark::kMillisecond);

void BM_Resample48k(benchmark::State& state) {
  const AudioClip clip = noise(static_cast<double>(state.range(0)), 48000);
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::audio::resample(clip));
}
BENCHMARK(BM_Resample48k)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TimeStretch(benchmark::State& state) {
  const AudioClip clip = noise(2.3);
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::audio::time_stretch(clip));
}
BENCHMARK(BM_TimeStretch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
