#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "lirdrec/dataio.hpp"
#include "lirdrec/parallel.hpp"
#include "lirdrec/ranking_model.hpp"

namespace lirdrec {

// relevant must be sorted ascending; binary relevance.
inline double recall_at_k(std::span<const int32_t> ranked, std::span<const int32_t> relevant,
                          int k) {
  if (relevant.empty()) throw ContractError("recall_at_k: empty relevant set");
  size_t hits = 0;
  const size_t top = std::min<size_t>(k, ranked.size());
  for (size_t r = 0; r < top; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// Gain 1, discount 1/log2(rank+1); ideal DCG over min(k, |relevant|).
inline double ndcg_at_k(std::span<const int32_t> ranked, std::span<const int32_t> relevant,
                        int k) {
  if (relevant.empty()) throw ContractError("ndcg_at_k: empty relevant set");
  double dcg = 0.0;
  const size_t top = std::min<size_t>(k, ranked.size());
  for (size_t r = 0; r < top; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  const size_t ideal = std::min<size_t>(k, relevant.size());
  for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

// Top-k indices by descending score, ties to the lower index; masked items
// (mask[i] != 0) never appear.
template <typename T>
std::vector<int32_t> topk_ranked(std::span<const T> scores, int k,
                                 const std::vector<uint8_t>* mask = nullptr) {
  std::vector<int32_t> cand;
  cand.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i)
    if (mask == nullptr || (*mask)[i] == 0) cand.push_back(static_cast<int32_t>(i));
  const auto cmp = [&scores](int32_t a, int32_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  const size_t top = std::min<size_t>(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + top, cand.end(), cmp);
  cand.resize(top);
  return cand;
}

struct MetricsReport {
  struct Entry {
    Split split;
    int k;
    double recall = 0.0;
    double ndcg = 0.0;
  };
  std::vector<Entry> entries;
  size_t users_evaluated = 0;
  size_t users_skipped = 0;  // empty ground truth

  const Entry& at(int k) const {
    for (const auto& e : entries)
      if (e.k == k) return e;
    throw ContractError("MetricsReport: no entry for k=" + std::to_string(k));
  }
};

// All-ranking evaluation: every non-masked item is scored per user. Train
// items are always masked; evaluating the test split additionally masks
// valid items. Users without ground truth are skipped but counted.
template <typename T>
MetricsReport evaluate(RankingModel<T>& model, const Dataset& ds, Split split,
                       std::span<const int> ks) {
  Tensor<T> users, items;
  model.eval_representations(users, items);
  const auto train_items = ds.items_by_user(Split::train);
  const auto valid_items = ds.items_by_user(Split::valid);
  const auto target_items = ds.items_by_user(split);
  const size_t num_users = ds.num_users;
  const size_t num_items = ds.num_items;
  const int max_k = *std::max_element(ks.begin(), ks.end());

  // per-user metric slots keep the parallel reduction deterministic
  std::vector<std::vector<double>> recall(ks.size(), std::vector<double>(num_users, -1.0));
  std::vector<std::vector<double>> ndcg(ks.size(), std::vector<double>(num_users, -1.0));

  parallel_for(num_users, [&](size_t u0, size_t u1) {
    std::vector<T> scores(num_items);
    std::vector<uint8_t> mask(num_items);
    for (size_t u = u0; u < u1; ++u) {
      const auto& relevant = target_items[u];
      if (relevant.empty()) continue;
      std::fill(mask.begin(), mask.end(), 0);
      for (const int32_t i : train_items[u]) mask[i] = 1;
      if (split == Split::test)
        for (const int32_t i : valid_items[u]) mask[i] = 1;
      const T* urow = users.data() + u * users.cols();
      for (size_t i = 0; i < num_items; ++i) {
        const T* irow = items.data() + i * items.cols();
        T s = T(0);
        for (size_t c = 0; c < users.cols(); ++c) s += urow[c] * irow[c];
        scores[i] = s;
      }
      const auto ranked = topk_ranked<T>(scores, max_k, &mask);
      for (size_t ki = 0; ki < ks.size(); ++ki) {
        recall[ki][u] = recall_at_k(ranked, relevant, ks[ki]);
        ndcg[ki][u] = ndcg_at_k(ranked, relevant, ks[ki]);
      }
    }
  });

  MetricsReport report;
  size_t evaluated = 0, skipped = 0;
  for (size_t u = 0; u < num_users; ++u)
    (target_items[u].empty() ? skipped : evaluated)++;
  report.users_evaluated = evaluated;
  report.users_skipped = skipped;
  for (size_t ki = 0; ki < ks.size(); ++ki) {
    MetricsReport::Entry e;
    e.split = split;
    e.k = ks[ki];
    double rsum = 0.0, nsum = 0.0;
    for (size_t u = 0; u < num_users; ++u) {
      if (recall[ki][u] < 0.0) continue;
      rsum += recall[ki][u];
      nsum += ndcg[ki][u];
    }
    if (evaluated > 0) {
      e.recall = rsum / static_cast<double>(evaluated);
      e.ndcg = nsum / static_cast<double>(evaluated);
    }
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace lirdrec
