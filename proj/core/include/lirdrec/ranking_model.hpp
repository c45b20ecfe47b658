#pragma once

#include <span>
#include <vector>

#include "lirdrec/tape.hpp"

namespace lirdrec {

// Tape handles for one BPR batch: user, positive-item and negative-item
// representations, each batch x dim.
struct BatchRefs {
  ValueId h_user = -1;
  ValueId h_pos = -1;
  ValueId h_neg = -1;
};

// Contract shared by LIRDRec and the reference baselines so the trainer,
// sampler, loss and evaluator run identically across models.
template <typename T>
class RankingModel {
 public:
  virtual ~RankingModel() = default;

  // Builds the differentiable batch representations on the tape. `training`
  // enables state updates that only happen inside optimization steps.
  virtual BatchRefs forward_batch(Tape<T>& tape, std::span<const int32_t> users,
                                  std::span<const int32_t> pos, std::span<const int32_t> neg,
                                  bool training) = 0;

  // Dense user/item matrices for full scoring; score(u,i) = dot(users[u], items[i]).
  virtual void eval_representations(Tensor<T>& users, Tensor<T>& items) = 0;

  virtual std::vector<Parameter<T>*> parameters() = 0;

  virtual size_t num_users() const = 0;
  virtual size_t num_items() const = 0;
};

}  // namespace lirdrec
