#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lirdrec/container.hpp"
#include "lirdrec/dataio.hpp"
#include "lirdrec/errors.hpp"
#include "lirdrec/parallel.hpp"
#include "lirdrec/sparse.hpp"

namespace lirdrec {

// Symmetric-normalized user-item operator in bipartite block form. Entry
// (u,i) carries 1/sqrt(|N_u||N_i|); built from the train split only.
template <typename T>
struct BipartiteAdjacency {
  Csr<T> user_to_item;  // |U| x |I|: multiplies item-side matrices
  Csr<T> item_to_user;  // transpose
  std::vector<int32_t> user_degree, item_degree;
  size_t isolated_users = 0, isolated_items = 0;
};

template <typename T>
BipartiteAdjacency<T> build_norm_adjacency(const Dataset& ds) {
  BipartiteAdjacency<T> adj;
  adj.user_degree.assign(ds.num_users, 0);
  adj.item_degree.assign(ds.num_items, 0);
  std::vector<std::tuple<uint32_t, uint32_t, double>> edges;
  for (const auto& r : ds.records) {
    if (r.split != Split::train) continue;
    adj.user_degree[r.user]++;
    adj.item_degree[r.item]++;
    edges.emplace_back(r.user, r.item, 0.0);
  }
  if (edges.empty()) throw ContractError("build_norm_adjacency: train split is empty");
  for (auto& [u, i, w] : edges)
    w = 1.0 / std::sqrt(static_cast<double>(adj.user_degree[u]) *
                        static_cast<double>(adj.item_degree[i]));
  auto full = Csr<double>::from_coo(ds.num_users, ds.num_items, std::move(edges));
  adj.user_to_item = csr_cast<T>(full);
  adj.item_to_user = adj.user_to_item.transposed();
  adj.isolated_users =
      std::count(adj.user_degree.begin(), adj.user_degree.end(), 0);
  adj.isolated_items =
      std::count(adj.item_degree.begin(), adj.item_degree.end(), 0);
  return adj;
}

// Binary kNN graph over item features: for each item keep the k most
// cosine-similar others (ties to the lower index, self excluded), then
// symmetrize by max. Similarities accumulate in double so the edge set is
// independent of the feature precision. Rows are processed in tiles to bound
// the similarity buffer.
inline Csr<float> build_knn_modality_graph(const Tensor<float>& features, int k) {
  const size_t n = features.rows();
  const size_t d = features.cols();
  if (k < 1 || static_cast<size_t>(k) >= n)
    throw ContractError("build_knn_modality_graph: need 1 <= k < num items");

  std::vector<double> norms(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t c = 0; c < d; ++c)
      s += static_cast<double>(features(i, c)) * static_cast<double>(features(i, c));
    norms[i] = std::sqrt(s);
  }

  std::vector<std::vector<uint32_t>> picked(n);
  const size_t tile = 256;
  std::vector<size_t> tile_starts;
  for (size_t t = 0; t < n; t += tile) tile_starts.push_back(t);
  parallel_for(tile_starts.size(), [&](size_t b0, size_t b1) {
    std::vector<double> sim(n);
    std::vector<uint32_t> order(n);
    for (size_t b = b0; b < b1; ++b) {
      const size_t begin = tile_starts[b], end = std::min(n, begin + tile);
      for (size_t i = begin; i < end; ++i) {
        for (size_t j = 0; j < n; ++j) {
          double dot = 0.0;
          for (size_t c = 0; c < d; ++c)
            dot += static_cast<double>(features(i, c)) * static_cast<double>(features(j, c));
          // zero-norm rows have cosine 0 against everything
          sim[j] = (norms[i] > 0.0 && norms[j] > 0.0) ? dot / (norms[i] * norms[j]) : 0.0;
        }
        sim[i] = -std::numeric_limits<double>::infinity();  // exclude self
        std::iota(order.begin(), order.end(), 0u);
        const auto cmp = [&sim](uint32_t a, uint32_t b) {
          return sim[a] != sim[b] ? sim[a] > sim[b] : a < b;
        };
        std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), cmp);
        picked[i].assign(order.begin(), order.begin() + k);
        std::sort(picked[i].begin(), picked[i].end());
      }
    }
  });

  // symmetrize by max: binary union of directed edges
  std::vector<std::vector<uint32_t>> neigh(n);
  for (size_t i = 0; i < n; ++i)
    for (const uint32_t j : picked[i]) {
      neigh[i].push_back(j);
      neigh[j].push_back(static_cast<uint32_t>(i));
    }
  Csr<float> g;
  g.rows = g.cols = n;
  g.indptr.assign(n + 1, 0);
  for (size_t i = 0; i < n; ++i) {
    auto& v = neigh[i];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    g.indptr[i + 1] = g.indptr[i] + static_cast<uint32_t>(v.size());
  }
  g.indices.reserve(g.indptr[n]);
  for (const auto& v : neigh) g.indices.insert(g.indices.end(), v.begin(), v.end());
  g.data.assign(g.indices.size(), 1.0f);
  return g;
}

// Frozen item-item operator S: weighted sum of per-modality graphs followed
// by symmetric normalization D^{-1/2} S D^{-1/2}.
template <typename T>
struct ItemItemGraph {
  Csr<T> matrix;
  int k = 0;
  std::vector<double> fusion_weights;
};

template <typename T>
Csr<T> fuse_and_normalize(std::span<const Csr<float>* const> graphs,
                          std::span<const double> weights) {
  if (graphs.empty() || graphs.size() != weights.size())
    throw ContractError("fuse_and_normalize: need one weight per graph");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ContractError("fuse_and_normalize: fusion weights must sum to 1");
  const size_t n = graphs[0]->rows;
  for (const auto* g : graphs)
    if (g->rows != n || g->cols != n)
      throw ContractError("fuse_and_normalize: graph dimensions differ");

  // k-way merge of sorted rows, summing weighted entries
  std::vector<std::tuple<uint32_t, uint32_t, double>> fused;
  std::vector<double> degree(n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    std::vector<std::pair<uint32_t, double>> row;
    for (size_t m = 0; m < graphs.size(); ++m) {
      const auto& g = *graphs[m];
      for (uint32_t p = g.indptr[r]; p < g.indptr[r + 1]; ++p)
        row.emplace_back(g.indices[p], weights[m] * static_cast<double>(g.data[p]));
    }
    std::sort(row.begin(), row.end());
    for (size_t i = 0; i < row.size();) {
      size_t j = i;
      double v = 0.0;
      while (j < row.size() && row[j].first == row[i].first) v += row[j++].second;
      fused.emplace_back(static_cast<uint32_t>(r), row[i].first, v);
      degree[r] += v;
      i = j;
    }
  }
  for (auto& [r, c, v] : fused) {
    const double dr = degree[r], dc = degree[c];
    v = (dr > 0.0 && dc > 0.0) ? v / std::sqrt(dr * dc) : 0.0;
  }
  return csr_cast<T>(Csr<double>::from_coo(n, n, std::move(fused)));
}

template <typename T>
ItemItemGraph<T> build_item_item_graph(std::span<const FeatureMatrix* const> modalities, int k,
                                       std::span<const double> weights) {
  std::vector<Csr<float>> per_modality;
  per_modality.reserve(modalities.size());
  for (const auto* m : modalities) per_modality.push_back(build_knn_modality_graph(m->values, k));
  std::vector<const Csr<float>*> ptrs;
  for (const auto& g : per_modality) ptrs.push_back(&g);
  ItemItemGraph<T> out;
  out.k = k;
  out.fusion_weights.assign(weights.begin(), weights.end());
  out.matrix = fuse_and_normalize<T>(std::span<const Csr<float>* const>(ptrs.data(), ptrs.size()),
                                     weights);
  return out;
}

}  // namespace lirdrec
