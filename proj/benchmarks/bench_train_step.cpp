#include <benchmark/benchmark.h>

#include <set>

#include "lirdrec/dct.hpp"
#include "lirdrec/model.hpp"
#include "lirdrec/trainer.hpp"

using namespace lirdrec;

namespace {

struct Bench {
  Dataset ds;
  BipartiteAdjacency<float> adj;
  Csr<float> item_graph;
  std::unique_ptr<LirdrecModel<float>> model;
  BprSampler sampler;

  explicit Bench(int32_t users, int32_t items)
      : ds(make_data(users, items)),
        adj(build_norm_adjacency<float>(ds)),
        item_graph(make_graph(items)),
        sampler(ds, 3) {
    Rng rng(7);
    std::vector<LirdrecModel<float>::ModalityInput> mods;
    for (const size_t dim : {64ul, 32ul}) {
      LirdrecModel<float>::ModalityInput in;
      in.id = "m" + std::to_string(dim);
      const auto raw = Tensor<double>::randn(items, dim, rng);
      in.raw = tensor_cast<float>(raw);
      in.dct = tensor_cast<float>(dct2(raw));
      mods.push_back(std::move(in));
    }
    LirdrecConfig<float> cfg;
    cfg.d = 64;
    cfg.d1 = 256;
    model = std::make_unique<LirdrecModel<float>>(users, items, std::move(mods), cfg, 11);
    model->attach_graphs(&adj, &item_graph);
  }

  static Dataset make_data(int32_t users, int32_t items) {
    Rng rng(1);
    Dataset ds;
    ds.num_users = users;
    ds.num_items = items;
    for (int32_t u = 0; u < users; ++u) {
      ds.user_ids.push_back(std::to_string(u));
      ds.user_index.emplace(ds.user_ids.back(), u);
    }
    for (int32_t i = 0; i < items; ++i) {
      ds.item_ids.push_back(std::to_string(i));
      ds.item_index.emplace(ds.item_ids.back(), i);
    }
    for (int32_t u = 0; u < users; ++u)
      for (int k = 0; k < 8; ++k)
        ds.records.push_back(
            {u, static_cast<int32_t>(rng.uniform_index(items)), Split::train});
    // drop duplicates
    std::set<std::pair<int32_t, int32_t>> seen;
    std::vector<InteractionRecord> recs;
    for (const auto& r : ds.records)
      if (seen.emplace(r.user, r.item).second) recs.push_back(r);
    ds.records = recs;
    return ds;
  }

  static Csr<float> make_graph(int32_t items) {
    Rng rng(2);
    const auto f = Tensor<float>::randn(items, 48, rng);
    const auto g = build_knn_modality_graph(f, 10);
    const std::vector<const Csr<float>*> graphs{&g};
    const std::vector<double> w{1.0};
    return fuse_and_normalize<float>({graphs.data(), graphs.size()}, w);
  }
};

}  // namespace

static void LirdrecTrainStep(benchmark::State& state) {
  static Bench bench(1000, 600);
  bench.sampler.start_epoch();
  BprBatch batch;
  AdamOptimizer<float> adam;
  const auto params = bench.model->parameters();
  for (auto _ : state) {
    if (!bench.sampler.next_batch(512, batch)) {
      bench.sampler.start_epoch();
      bench.sampler.next_batch(512, batch);
    }
    Tape<float> tape;
    const ValueId loss = compute_loss(tape, *bench.model, batch, 1e-4, false, true);
    for (auto* p : params) p->zero_grad();
    tape.backward(loss);
    adam.step(params);
    benchmark::DoNotOptimize(tape.value(loss));
  }
}
BENCHMARK(LirdrecTrainStep)->Unit(benchmark::kMillisecond);

static void LirdrecFullEvaluation(benchmark::State& state) {
  static Bench bench(1000, 600);
  for (auto _ : state) {
    Tensor<float> users, items;
    bench.model->eval_representations(users, items);
    benchmark::DoNotOptimize(users);
  }
}
BENCHMARK(LirdrecFullEvaluation)->Unit(benchmark::kMillisecond);
