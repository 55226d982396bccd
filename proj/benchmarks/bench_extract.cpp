#include <benchmark/benchmark.h>

#include "loopcompat/dedup/average_hash.hpp"
#include "loopcompat/extract/ntf.hpp"
#include "loopcompat/random.hpp"

namespace {

using loopcompat::extract::SongTensor;

SongTensor random_tensor(std::size_t bars, std::size_t frames, std::size_t bins) {
  loopcompat::Rng rng(3);
  SongTensor x(bars, frames, bins);
  for (double& v : x.values) v = rng.uniform(0.0, 1.0);
  return x;
}

// Song-sized tensor (bars x 64 frames x 128 mel bins), 10 iterations.
void BM_NtfIterations(benchmark::State& state) {
  const auto bars = static_cast<std::size_t>(state.range(0));
  const SongTensor x = random_tensor(bars, loopcompat::extract::kFramesPerBar, 128);
  const std::size_t rank = loopcompat::extract::default_rank(bars);
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::extract::ntf_factorize(x, rank, 10, 1));
  state.SetLabel("rank " + std::to_string(rank));
}
BENCHMARK(BM_NtfIterations)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AverageHash(benchmark::State& state) {
  loopcompat::Rng rng(4);
  loopcompat::Matrix m(173, 128);
  for (double& v : m.data) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(loopcompat::dedup::average_hash(m));
}
BENCHMARK(BM_AverageHash);

}  // namespace

BENCHMARK_MAIN();
