#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lirdrec/gcn.hpp"
#include "lirdrec/ranking_model.hpp"

namespace lirdrec {

// BPR matrix factorization: free user/item ID embeddings, dot-product scorer.
template <typename T>
class MfModel : public RankingModel<T> {
 public:
  MfModel(size_t num_users, size_t num_items, size_t dim, uint64_t seed)
      : num_users_(num_users), num_items_(num_items) {
    Rng rng(seed);
    user_emb_ = std::make_unique<Parameter<T>>("mf.user", Tensor<T>::xavier(num_users, dim, rng));
    item_emb_ = std::make_unique<Parameter<T>>("mf.item", Tensor<T>::xavier(num_items, dim, rng));
  }

  BatchRefs forward_batch(Tape<T>& tape, std::span<const int32_t> users,
                          std::span<const int32_t> pos, std::span<const int32_t> neg,
                          bool) override {
    const ValueId u = tape.leaf(*user_emb_);
    const ValueId i = tape.leaf(*item_emb_);
    return {tape.gather_rows(u, {users.begin(), users.end()}),
            tape.gather_rows(i, {pos.begin(), pos.end()}),
            tape.gather_rows(i, {neg.begin(), neg.end()})};
  }

  void eval_representations(Tensor<T>& users, Tensor<T>& items) override {
    users = user_emb_->value;
    items = item_emb_->value;
  }

  std::vector<Parameter<T>*> parameters() override { return {user_emb_.get(), item_emb_.get()}; }
  size_t num_users() const override { return num_users_; }
  size_t num_items() const override { return num_items_; }
  Parameter<T>& user_table() { return *user_emb_; }
  Parameter<T>& item_table() { return *item_emb_; }

 private:
  size_t num_users_, num_items_;
  std::unique_ptr<Parameter<T>> user_emb_, item_emb_;
};

// LightGCN: ID embeddings on both sides, L layers of parameter-free
// propagation, sum readout over layers.
template <typename T>
class LightGcnModel : public RankingModel<T> {
 public:
  LightGcnModel(size_t num_users, size_t num_items, size_t dim, int layers, uint64_t seed)
      : num_users_(num_users), num_items_(num_items), layers_(layers) {
    Rng rng(seed);
    user_emb_ = std::make_unique<Parameter<T>>("lgn.user", Tensor<T>::xavier(num_users, dim, rng));
    item_emb_ = std::make_unique<Parameter<T>>("lgn.item", Tensor<T>::xavier(num_items, dim, rng));
  }

  void attach_graphs(const BipartiteAdjacency<T>* adj) { adj_ = adj; }

  BatchRefs forward_batch(Tape<T>& tape, std::span<const int32_t> users,
                          std::span<const int32_t> pos, std::span<const int32_t> neg,
                          bool) override {
    require_graph();
    const auto [u_all, i_all] =
        forward_ui_gcn(tape, tape.leaf(*user_emb_), tape.leaf(*item_emb_), *adj_, layers_);
    return {tape.gather_rows(u_all, {users.begin(), users.end()}),
            tape.gather_rows(i_all, {pos.begin(), pos.end()}),
            tape.gather_rows(i_all, {neg.begin(), neg.end()})};
  }

  void eval_representations(Tensor<T>& users, Tensor<T>& items) override {
    require_graph();
    Tape<T> tape;
    const auto [u_all, i_all] =
        forward_ui_gcn(tape, tape.leaf(*user_emb_), tape.leaf(*item_emb_), *adj_, layers_);
    users = tape.value(u_all);
    items = tape.value(i_all);
  }

  std::vector<Parameter<T>*> parameters() override { return {user_emb_.get(), item_emb_.get()}; }
  size_t num_users() const override { return num_users_; }
  size_t num_items() const override { return num_items_; }

 private:
  void require_graph() const {
    if (adj_ == nullptr) throw ContractError("LightGcnModel: graph not attached");
  }

  size_t num_users_, num_items_;
  int layers_;
  std::unique_ptr<Parameter<T>> user_emb_, item_emb_;
  const BipartiteAdjacency<T>* adj_ = nullptr;
};

// VBPR: ID embeddings concatenated with a shared linear projection of the
// raw multimodal features; the score decomposes exactly into
// id_part + mm_part, which the diagnostics rely on.
template <typename T>
class VbprModel : public RankingModel<T> {
 public:
  struct BatchNodes {
    ValueId id_pos = -1;  // gathered positive-item ID rows
    ValueId mm_pos = -1;  // gathered positive-item projected feature rows
  };

  VbprModel(size_t num_users, size_t num_items, Tensor<T> features_concat, size_t dim,
            uint64_t seed)
      : num_users_(num_users), num_items_(num_items), features_(std::move(features_concat)) {
    if (features_.rows() != num_items)
      throw ContractError("VbprModel: feature rows do not match item count");
    Rng rng(seed);
    id_user_ = std::make_unique<Parameter<T>>("vbpr.id_user",
                                              Tensor<T>::xavier(num_users, dim, rng));
    id_item_ = std::make_unique<Parameter<T>>("vbpr.id_item",
                                              Tensor<T>::xavier(num_items, dim, rng));
    pref_user_ = std::make_unique<Parameter<T>>("vbpr.pref_user",
                                                Tensor<T>::xavier(num_users, dim, rng));
    mm_proj_ = std::make_unique<Parameter<T>>("vbpr.mm_proj",
                                              Tensor<T>::xavier(features_.cols(), dim, rng));
  }

  BatchRefs forward_batch(Tape<T>& tape, std::span<const int32_t> users,
                          std::span<const int32_t> pos, std::span<const int32_t> neg,
                          bool) override {
    const ValueId mm_all = tape.matmul(tape.constant_ref(&features_), tape.leaf(*mm_proj_));
    const ValueId idu = tape.gather_rows(tape.leaf(*id_user_), {users.begin(), users.end()});
    const ValueId pu = tape.gather_rows(tape.leaf(*pref_user_), {users.begin(), users.end()});
    const ValueId id_item_leaf = tape.leaf(*id_item_);
    last_nodes_.id_pos = tape.gather_rows(id_item_leaf, {pos.begin(), pos.end()});
    last_nodes_.mm_pos = tape.gather_rows(mm_all, {pos.begin(), pos.end()});
    const ValueId id_neg = tape.gather_rows(id_item_leaf, {neg.begin(), neg.end()});
    const ValueId mm_neg = tape.gather_rows(mm_all, {neg.begin(), neg.end()});
    const std::vector<ValueId> hu{idu, pu};
    const std::vector<ValueId> hi{last_nodes_.id_pos, last_nodes_.mm_pos};
    const std::vector<ValueId> hj{id_neg, mm_neg};
    return {tape.concat_cols(hu), tape.concat_cols(hi), tape.concat_cols(hj)};
  }

  void eval_representations(Tensor<T>& users, Tensor<T>& items) override {
    const size_t d = id_user_->value.cols();
    users = Tensor<T>(num_users_, 2 * d);
    for (size_t u = 0; u < num_users_; ++u)
      for (size_t c = 0; c < d; ++c) {
        users(u, c) = id_user_->value(u, c);
        users(u, d + c) = pref_user_->value(u, c);
      }
    const Tensor<T> mm = mm_rows_all();
    items = Tensor<T>(num_items_, 2 * d);
    for (size_t i = 0; i < num_items_; ++i)
      for (size_t c = 0; c < d; ++c) {
        items(i, c) = id_item_->value(i, c);
        items(i, d + c) = mm(i, c);
      }
  }

  // Score with its exact decomposition: y = id_part + mm_part.
  void score_breakdown(int32_t user, int32_t item, double* id_part, double* mm_part) const {
    const size_t d = id_user_->value.cols();
    double idp = 0.0, mmp = 0.0;
    const Tensor<T> mm = mm_row(item);
    for (size_t c = 0; c < d; ++c) {
      idp += static_cast<double>(id_user_->value(user, c)) *
             static_cast<double>(id_item_->value(item, c));
      mmp += static_cast<double>(pref_user_->value(user, c)) * static_cast<double>(mm(0, c));
    }
    *id_part = idp;
    *mm_part = mmp;
  }

  Tensor<T> mm_row(int32_t item) const {
    const size_t d = mm_proj_->value.cols();
    Tensor<T> out(1, d);
    for (size_t f = 0; f < features_.cols(); ++f) {
      const T x = features_(item, f);
      if (x == T(0)) continue;
      for (size_t c = 0; c < d; ++c) out(0, c) += x * mm_proj_->value(f, c);
    }
    return out;
  }

  Tensor<T> mm_rows_all() const {
    const size_t d = mm_proj_->value.cols();
    Tensor<T> out(num_items_, d);
    detail::gemm_nn_acc(features_, mm_proj_->value, out);
    return out;
  }

  std::vector<Parameter<T>*> parameters() override {
    return {id_user_.get(), id_item_.get(), pref_user_.get(), mm_proj_.get()};
  }
  size_t num_users() const override { return num_users_; }
  size_t num_items() const override { return num_items_; }

  const BatchNodes& last_batch_nodes() const { return last_nodes_; }
  Parameter<T>& id_user() { return *id_user_; }
  Parameter<T>& id_item() { return *id_item_; }
  Parameter<T>& pref_user() { return *pref_user_; }
  Parameter<T>& mm_projection() { return *mm_proj_; }
  const Tensor<T>& features() const { return features_; }

 private:
  size_t num_users_, num_items_;
  Tensor<T> features_;
  std::unique_ptr<Parameter<T>> id_user_, id_item_, pref_user_, mm_proj_;
  BatchNodes last_nodes_;
};

}  // namespace lirdrec
