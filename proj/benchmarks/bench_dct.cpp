#include <benchmark/benchmark.h>

#include "lirdrec/dct.hpp"

using namespace lirdrec;

static void Dct2Pow2(benchmark::State& state) {
  Rng rng(1);
  const auto x = Tensor<double>::randn(state.range(0), 128, rng);
  DctPlan plan(x.rows(), x.cols());
  for (auto _ : state) {
    auto y = plan.forward(x);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(Dct2Pow2)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

static void Dct2Bluestein(benchmark::State& state) {
  // non-power-of-two row axis exercises the chirp transform
  Rng rng(2);
  const auto x = Tensor<double>::randn(state.range(0), 96, rng);
  DctPlan plan(x.rows(), x.cols());
  for (auto _ : state) {
    auto y = plan.forward(x);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(Dct2Bluestein)->Arg(243)->Arg(1001)->Arg(7050)->Complexity();

static void Dct1dDirectReference(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> x(state.range(0));
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) {
    auto y = detail::dct1d_direct(x);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(Dct1dDirectReference)->RangeMultiplier(4)->Range(64, 1024)->Complexity();
