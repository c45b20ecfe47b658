#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lirdrec/container.hpp"
#include "lirdrec/errors.hpp"

namespace lirdrec {

enum class Split : uint8_t { train = 0, valid = 1, test = 2 };

struct InteractionRecord {
  int32_t user = 0;
  int32_t item = 0;
  Split split = Split::train;
};

// Implicit-feedback interactions with dense contiguous ids. External string
// ids are re-indexed in order of first appearance.
struct Dataset {
  int32_t num_users = 0;
  int32_t num_items = 0;
  std::vector<InteractionRecord> records;
  std::vector<std::string> user_ids;  // dense index -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int32_t> user_index;
  std::unordered_map<std::string, int32_t> item_index;

  size_t count(Split s) const;
  // items of each user restricted to one split, item lists sorted ascending
  std::vector<std::vector<int32_t>> items_by_user(Split s) const;
  void validate() const;  // index bounds + no duplicate (user,item) within a split
};

struct LoadOptions {
  bool dedup = false;        // duplicate (user,item[,split]) rows: drop vs reject
  int32_t expect_users = -1;  // when >= 0, vocabulary may not exceed this size
  int32_t expect_items = -1;
};

// UTF-8 TSV with header `user\titem` or `user\titem\tsplit`, split in {0,1,2}.
Dataset load_interactions(const std::string& path, const LoadOptions& opts = {});
void store_interactions(const Dataset& ds, const std::string& path);

// Per-user random 8:1:1-style partition. Every user needs >= 5 interactions;
// counts are n_test = n_valid = max(1, floor(ratio*n)), remainder to train.
Dataset split_random(const Dataset& ds, std::array<double, 3> ratios, uint64_t seed);

// Holds out a fraction of items entirely; their interactions become the
// validation/test sets depending on item membership.
Dataset split_cold_start(const Dataset& ds, double holdout_fraction, uint64_t seed);

// Restricts to a random subset of users, dropping items left untouched.
Dataset subsample_users(const Dataset& ds, int32_t keep_users, uint64_t seed);

}  // namespace lirdrec
