#include <benchmark/benchmark.h>

#include "loopcompat/nn/model.hpp"
#include "loopcompat/random.hpp"

namespace {

using namespace loopcompat::nn;

Tensor4 random_input(std::size_t n) {
  loopcompat::Rng rng(5);
  Tensor4 x(Shape{n, 1, 173, 128});
  for (double& v : x.data) v = rng.normal();
  return x;
}

void BM_SkeletonForwardEval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Network net(ModelKind::Snn, ArchConfig{});
  const Tensor4 x = random_input(n);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, Mode::Eval));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SkeletonForwardEval)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_CnnTrainStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Network net(ModelKind::Cnn, ArchConfig{});
  const Tensor4 x = random_input(n);
  for (auto _ : state) {
    const Tensor4 out = net.forward(x, Mode::Train);
    net.zero_grad();
    net.backward(Tensor4(out.shape, 1.0 / static_cast<double>(n)));
    net.sgd_step(0.01);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_CnnTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
