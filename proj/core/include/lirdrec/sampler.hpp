#pragma once

#include <cstdint>
#include <vector>

#include "lirdrec/dataio.hpp"
#include "lirdrec/rng.hpp"

namespace lirdrec {

struct BprBatch {
  std::vector<int32_t> users, pos, neg;
  size_t size() const { return users.size(); }
};

// BPR triple sampler: positives come from a shuffled epoch pass over all
// train edges; each positive draws one uniform negative outside the user's
// train items.
class BprSampler {
 public:
  BprSampler(const Dataset& ds, uint64_t seed);

  void start_epoch();  // reshuffles the edge order
  bool next_batch(size_t batch_size, BprBatch& out);
  size_t train_edges() const { return edges_.size(); }

 private:
  bool is_train_item(int32_t user, int32_t item) const;

  int32_t num_items_;
  std::vector<std::pair<int32_t, int32_t>> edges_;
  std::vector<std::vector<int32_t>> train_items_;  // sorted per user
  size_t cursor_ = 0;
  Rng rng_;
};

}  // namespace lirdrec
