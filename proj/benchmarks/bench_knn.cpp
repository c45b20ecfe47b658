#include <benchmark/benchmark.h>

#include "lirdrec/graphs.hpp"

using namespace lirdrec;

static void KnnGraphBuild(benchmark::State& state) {
  Rng rng(3);
  const auto f = Tensor<float>::randn(state.range(0), 128, rng);
  for (auto _ : state) {
    auto g = build_knn_modality_graph(f, 10);
    benchmark::DoNotOptimize(g);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(KnnGraphBuild)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

static void FuseAndNormalize(benchmark::State& state) {
  Rng rng(5);
  const auto fa = Tensor<float>::randn(state.range(0), 64, rng);
  const auto fb = Tensor<float>::randn(state.range(0), 32, rng);
  const auto ga = build_knn_modality_graph(fa, 10);
  const auto gb = build_knn_modality_graph(fb, 10);
  const std::vector<const Csr<float>*> graphs{&ga, &gb};
  const std::vector<double> w{0.1, 0.9};
  for (auto _ : state) {
    auto s = fuse_and_normalize<float>({graphs.data(), graphs.size()}, w);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(FuseAndNormalize)->Arg(1024)->Arg(4096);
