#include <benchmark/benchmark.h>

#include "lirdrec/tape.hpp"

using namespace lirdrec;

namespace {

Csr<float> random_graph(size_t n, double density, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::tuple<uint32_t, uint32_t, float>> entries;
  for (uint32_t r = 0; r < n; ++r)
    for (uint32_t c = 0; c < n; ++c)
      if (rng.uniform_real() < density) entries.emplace_back(r, c, 1.0f);
  return Csr<float>::from_coo(n, n, std::move(entries));
}

}  // namespace

static void SpmmPropagation(benchmark::State& state) {
  const size_t n = state.range(0);
  const auto s = random_graph(n, 10.0 / static_cast<double>(n), 5);
  Rng rng(7);
  const auto x = Tensor<float>::randn(n, 192, rng);
  Tensor<float> y;
  for (auto _ : state) {
    s.multiply(x, y);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(SpmmPropagation)->RangeMultiplier(2)->Range(1024, 16384)->Complexity();

static void SpmmVsDense(benchmark::State& state) {
  const size_t n = 512;
  const auto s = random_graph(n, 10.0 / static_cast<double>(n), 9);
  const auto dense = s.to_dense();
  Rng rng(11);
  const auto x = Tensor<float>::randn(n, 64, rng);
  if (state.range(0) == 0) {
    Tensor<float> y;
    for (auto _ : state) {
      s.multiply(x, y);
      benchmark::DoNotOptimize(y);
    }
  } else {
    for (auto _ : state) {
      Tensor<float> y(n, 64);
      detail::gemm_nn_acc(dense, x, y);
      benchmark::DoNotOptimize(y);
    }
  }
}
BENCHMARK(SpmmVsDense)->Arg(0)->Arg(1);
