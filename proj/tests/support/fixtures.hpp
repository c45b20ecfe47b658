#pragma once

#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "lirdrec/dct.hpp"
#include "lirdrec/graphs.hpp"
#include "lirdrec/model.hpp"

namespace lirdrec::testing {

inline Dataset make_dataset(int32_t users, int32_t items,
                            const std::vector<std::tuple<int32_t, int32_t, Split>>& edges) {
  Dataset ds;
  ds.num_users = users;
  ds.num_items = items;
  for (int32_t u = 0; u < users; ++u) {
    ds.user_ids.push_back("u" + std::to_string(u));
    ds.user_index.emplace(ds.user_ids.back(), u);
  }
  for (int32_t i = 0; i < items; ++i) {
    ds.item_ids.push_back("i" + std::to_string(i));
    ds.item_index.emplace(ds.item_ids.back(), i);
  }
  for (const auto& [u, i, s] : edges) ds.records.push_back({u, i, s});
  return ds;
}

// Small random dataset where every user gets a fixed number of distinct
// train items plus optional valid/test items.
inline Dataset make_random_dataset(int32_t users, int32_t items, int train_per_user,
                                   int valid_per_user, int test_per_user, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::tuple<int32_t, int32_t, Split>> edges;
  const int need = train_per_user + valid_per_user + test_per_user;
  for (int32_t u = 0; u < users; ++u) {
    std::vector<int32_t> pool(items);
    std::iota(pool.begin(), pool.end(), 0);
    for (size_t i = pool.size() - 1; i > 0; --i)
      std::swap(pool[i], pool[rng.uniform_index(i + 1)]);
    int k = 0;
    for (; k < train_per_user; ++k) edges.emplace_back(u, pool[k], Split::train);
    for (; k < train_per_user + valid_per_user; ++k) edges.emplace_back(u, pool[k], Split::valid);
    for (; k < need; ++k) edges.emplace_back(u, pool[k], Split::test);
  }
  return make_dataset(users, items, edges);
}

// Toy LIRDRec instance (f64): 4 users, 5 items, 2 modalities, d = 3.
template <typename T = double>
struct ToyLirdrec {
  Dataset ds;
  BipartiteAdjacency<T> adj;
  Csr<T> item_graph;
  std::unique_ptr<LirdrecModel<T>> model;
};

template <typename T = double>
ToyLirdrec<T> make_toy_lirdrec(uint64_t seed, LirdrecConfig<T> cfg = [] {
  LirdrecConfig<T> c;
  c.d = 3;
  c.d1 = 4;
  c.l_ui = 2;
  c.l_ii = 1;
  c.pwc.d_h = 3;
  return c;
}()) {
  ToyLirdrec<T> toy;
  toy.ds = make_dataset(4, 5,
                        {{0, 0, Split::train},
                         {0, 1, Split::train},
                         {1, 1, Split::train},
                         {1, 2, Split::train},
                         {2, 2, Split::train},
                         {2, 3, Split::train},
                         {3, 3, Split::train},
                         {3, 4, Split::train},
                         {0, 2, Split::valid},
                         {1, 3, Split::valid},
                         {2, 4, Split::valid},
                         {3, 0, Split::valid},
                         {0, 3, Split::test},
                         {1, 4, Split::test},
                         {2, 0, Split::test},
                         {3, 1, Split::test}});
  toy.adj = build_norm_adjacency<T>(toy.ds);

  Rng rng(seed);
  std::vector<typename LirdrecModel<T>::ModalityInput> modalities;
  const std::vector<size_t> dims{6, 4};
  std::vector<FeatureMatrix> fms;
  for (size_t m = 0; m < dims.size(); ++m) {
    Tensor<double> raw = Tensor<double>::randn(5, dims[m], rng);
    typename LirdrecModel<T>::ModalityInput in;
    in.id = m == 0 ? "visual" : "textual";
    in.raw = tensor_cast<T>(raw);
    in.dct = tensor_cast<T>(dct2(raw));
    modalities.push_back(std::move(in));
    FeatureMatrix fm;
    fm.modality_id = m == 0 ? "visual" : "textual";
    fm.values = tensor_cast<float>(raw);
    fms.push_back(std::move(fm));
  }
  std::vector<const FeatureMatrix*> fptrs;
  for (const auto& f : fms) fptrs.push_back(&f);
  const std::vector<double> weights{0.5, 0.5};
  toy.item_graph =
      build_item_item_graph<T>(std::span<const FeatureMatrix* const>(fptrs.data(), fptrs.size()),
                               2, weights)
          .matrix;
  toy.model = std::make_unique<LirdrecModel<T>>(4, 5, std::move(modalities), cfg, seed + 1);
  toy.model->attach_graphs(&toy.adj, &toy.item_graph);
  return toy;
}

// Smallest |preactivation| across the model's leaky-relu inputs for the
// current parameters and batch; gradient checks resample seeds when this is
// too close to the kink for the finite-difference step.
template <typename T>
double min_abs_preactivation(LirdrecModel<T>& model, std::span<const int32_t> users) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&best](const Tensor<T>& x, Parameter<T>& w1, Parameter<T>& b1) {
    Tensor<T> pre(x.rows(), w1.value.cols());
    detail::gemm_nn_acc(x, w1.value, pre);
    for (size_t r = 0; r < pre.rows(); ++r)
      for (size_t c = 0; c < pre.cols(); ++c)
        best = std::min(best, std::abs(static_cast<double>(pre(r, c) + b1.value(0, c))));
  };
  for (size_t m = 0; m < model.modality_projectors().size(); ++m) {
    auto& p = model.modality_projectors()[m];
    scan(model.raw_features(m), p.w1, p.b1);
  }
  scan(model.shared_input(), model.shared_projector().w1, model.shared_projector().b1);
  if (model.config().pwc.enabled && !users.empty()) {
    Tape<T> tape;
    const ValueId x = model.assemble_items(tape);
    const auto [u_all, i_all] = forward_ui_gcn(tape, tape.leaf(model.user_table()), x,
                                               *model.adjacency(), model.config().l_ui);
    const ValueId batch = tape.gather_rows(u_all, {users.begin(), users.end()});
    const size_t d = model.config().d;
    for (size_t b = 0; b < model.num_chunks(); ++b) {
      Tensor<T> chunk(users.size(), d);
      for (size_t r = 0; r < users.size(); ++r)
        for (size_t c = 0; c < d; ++c) chunk(r, c) = tape.value(batch)(r, b * d + c);
      scan(chunk, model.chunk_encoders()[b].w1, model.chunk_encoders()[b].b1);
    }
  }
  return best;
}

}  // namespace lirdrec::testing
