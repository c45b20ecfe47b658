#include "lirdrec/sampler.hpp"

#include <algorithm>

#include "lirdrec/errors.hpp"

namespace lirdrec {

BprSampler::BprSampler(const Dataset& ds, uint64_t seed)
    : num_items_(ds.num_items), rng_(seed) {
  train_items_ = ds.items_by_user(Split::train);
  for (int32_t u = 0; u < ds.num_users; ++u) {
    if (static_cast<int32_t>(train_items_[u].size()) == num_items_)
      throw ContractError("BprSampler: user " + ds.user_ids[u] +
                          " interacts with every item; no negative exists");
    for (const int32_t i : train_items_[u]) edges_.emplace_back(u, i);
  }
  if (edges_.empty()) throw ContractError("BprSampler: train split is empty");
}

void BprSampler::start_epoch() {
  for (size_t i = edges_.size() - 1; i > 0; --i)
    std::swap(edges_[i], edges_[rng_.uniform_index(i + 1)]);
  cursor_ = 0;
}

bool BprSampler::is_train_item(int32_t user, int32_t item) const {
  const auto& v = train_items_[user];
  return std::binary_search(v.begin(), v.end(), item);
}

bool BprSampler::next_batch(size_t batch_size, BprBatch& out) {
  out.users.clear();
  out.pos.clear();
  out.neg.clear();
  if (cursor_ >= edges_.size()) return false;
  const size_t end = std::min(edges_.size(), cursor_ + batch_size);
  for (; cursor_ < end; ++cursor_) {
    const auto [u, i] = edges_[cursor_];
    int32_t j = -1;
    constexpr int kResampleCap = 10000;
    for (int attempt = 0; attempt < kResampleCap; ++attempt) {
      const auto cand = static_cast<int32_t>(rng_.uniform_index(num_items_));
      if (!is_train_item(u, cand)) {
        j = cand;
        break;
      }
    }
    if (j < 0)
      throw ContractError("BprSampler: exhausted resample cap drawing a negative for user " +
                          std::to_string(u));
    out.users.push_back(u);
    out.pos.push_back(i);
    out.neg.push_back(j);
  }
  return true;
}

}  // namespace lirdrec
