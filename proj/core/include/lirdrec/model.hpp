#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lirdrec/gcn.hpp"
#include "lirdrec/mft.hpp"
#include "lirdrec/ranking_model.hpp"

namespace lirdrec {

struct PwcConfig {
  enum class ThetaScope { kGlobal, kPerUser };
  // What counts as the "n-th training iteration" for the decay update: every
  // mini-batch, or once per epoch (the copy then commits the epoch's mean).
  enum class Update { kPerBatch, kPerEpoch };

  bool enabled = true;
  // scale the blended chunk weights through a softmax at fusion time; theta
  // stores pre-softmax blended values either way
  bool softmax = true;
  ThetaScope scope = ThetaScope::kGlobal;
  Update update = Update::kPerBatch;
  double tau0 = 0.9;
  double gamma = 0.9;
  size_t d_h = 32;
};

// Progressive-weight-copy target state: frozen per-chunk logits plus the
// decay bookkeeping. Mutated only inside training steps.
template <typename T>
struct PwcState {
  Tensor<T> theta;  // 1 x B (global) or |U| x B (per-user)
  double tau = 0.9;
  double gamma = 0.9;
  uint64_t n = 1;  // iteration counter (mini-batch or epoch per config)
  // per-epoch mode: running sums of blended weights awaiting the commit
  Tensor<double> epoch_acc;  // same shape as theta
  std::vector<int64_t> epoch_rows;  // rows accumulated (per theta row)
};

template <typename T>
struct LirdrecConfig {
  size_t d = 64;    // per-block latent width
  size_t d1 = 256;  // projector hidden width
  int l_ui = 2;
  int l_ii = 1;
  T leaky_slope = T(0.01);
  PwcConfig pwc;
};

// Per-chunk weight network of the PWC module:
// a_b = phi(E_u^b W1 + b1) W2 + b2, scalar output per row.
template <typename T>
struct ChunkEncoder {
  Parameter<T> w1, b1, w2, b2;

  ChunkEncoder(const std::string& prefix, size_t chunk_dim, size_t hidden, Rng& rng)
      : w1(prefix + ".w1", Tensor<T>::xavier(chunk_dim, hidden, rng)),
        b1(prefix + ".b1", Tensor<T>(1, hidden)),
        w2(prefix + ".w2", Tensor<T>::xavier(hidden, 1, rng)),
        b2(prefix + ".b2", Tensor<T>(1, 1)) {}

  ValueId forward(Tape<T>& tape, ValueId x, T slope) {
    return tape.add_bias(
        tape.matmul(tape.leaky_relu(tape.add_bias(tape.matmul(x, tape.leaf(w1)), tape.leaf(b1)), slope),
                    tape.leaf(w2)),
        tape.leaf(b2));
  }

  std::vector<Parameter<T>*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

// LIRDRec: item representations come only from multimodal features (no item
// ID table). Users own an l-wide embedding; items are the concatenation of
// |M| projected modalities plus a shared block over DCT features, refined by
// two propagation stages; PWC reweights user chunks.
template <typename T>
class LirdrecModel : public RankingModel<T> {
 public:
  struct ModalityInput {
    std::string id;
    Tensor<T> raw;  // |I| x d_m, input to the modality head
    Tensor<T> dct;  // 2-D DCT of raw, input to the shared head
  };

  LirdrecModel(size_t num_users, size_t num_items, std::vector<ModalityInput> modalities,
               LirdrecConfig<T> cfg, uint64_t seed)
      : cfg_(cfg),
        num_users_(num_users),
        num_items_(num_items),
        chunks_(modalities.size() + 1),
        width_((modalities.size() + 1) * cfg.d),
        rng_(seed),
        user_emb_("user_emb", Tensor<T>::xavier(num_users, (modalities.size() + 1) * cfg.d, rng_)) {
    if (modalities.empty()) throw ContractError("LirdrecModel: need at least one modality");
    size_t dct_width = 0;
    for (const auto& m : modalities) {
      if (m.raw.rows() != num_items)
        throw ContractError("LirdrecModel: feature rows for '" + m.id + "' (" +
                            std::to_string(m.raw.rows()) + ") do not match item count (" +
                            std::to_string(num_items) + ")");
      if (!m.dct.same_shape(m.raw))
        throw ContractError("LirdrecModel: dct block shape mismatch for '" + m.id + "'");
      dct_width += m.raw.cols();
    }
    for (const auto& m : modalities) {
      raw_features_.push_back(m.raw);
      modality_ids_.push_back(m.id);
      projectors_.emplace_back("proj." + m.id, m.raw.cols(), cfg_.d1, cfg_.d, rng_);
    }
    shared_input_ = Tensor<T>(num_items, dct_width);
    size_t off = 0;
    for (const auto& m : modalities) {
      for (size_t r = 0; r < num_items; ++r)
        for (size_t c = 0; c < m.dct.cols(); ++c) shared_input_(r, off + c) = m.dct(r, c);
      off += m.dct.cols();
    }
    shared_projector_ = std::make_unique<FeatureProjector<T>>("proj.shared", dct_width, cfg_.d1,
                                                              cfg_.d, rng_);
    if (cfg_.pwc.enabled) {
      for (size_t b = 0; b < chunks_; ++b)
        chunk_encoders_.emplace_back("pwc.chunk" + std::to_string(b), cfg_.d, cfg_.pwc.d_h, rng_);
      const size_t theta_rows = cfg_.pwc.scope == PwcConfig::ThetaScope::kGlobal ? 1 : num_users;
      pwc_state_.theta = Tensor<T>(theta_rows, chunks_);
      pwc_state_.tau = cfg_.pwc.tau0;
      pwc_state_.gamma = cfg_.pwc.gamma;
      pwc_state_.n = 1;
    }
  }

  void attach_graphs(const BipartiteAdjacency<T>* adj, const Csr<T>* item_graph) {
    if (adj != nullptr && (adj->user_to_item.rows != num_users_ || adj->user_to_item.cols != num_items_))
      throw ContractError("LirdrecModel: adjacency dimensions do not match the dataset");
    if (item_graph != nullptr && (item_graph->rows != num_items_ || item_graph->cols != num_items_))
      throw ContractError("LirdrecModel: item graph dimensions do not match the item count");
    adj_ = adj;
    item_graph_ = item_graph;
  }

  // MFT forward: modality blocks from raw features, shared block from the
  // concatenated DCT features, assembled into the |I| x l item latent.
  ValueId assemble_items(Tape<T>& tape) {
    std::vector<ValueId> blocks;
    for (size_t m = 0; m < projectors_.size(); ++m)
      blocks.push_back(projectors_[m].forward(tape, tape.constant_ref(&raw_features_[m]),
                                              cfg_.leaky_slope));
    blocks.push_back(shared_projector_->forward(tape, tape.constant_ref(&shared_input_),
                                                cfg_.leaky_slope));
    return assemble_item_latent<T>(tape, blocks);
  }

  // Raw per-chunk weights a_b for a batch of user rows -> batch x B.
  ValueId pwc_weights(Tape<T>& tape, ValueId user_batch) {
    if (tape.value(user_batch).cols() != width_)
      throw ContractError("pwc_weights: unexpected user width");
    std::vector<ValueId> cols;
    for (size_t b = 0; b < chunks_; ++b) {
      const ValueId chunk = tape.slice_cols(user_batch, b * cfg_.d, (b + 1) * cfg_.d);
      cols.push_back(chunk_encoders_[b].forward(tape, chunk, cfg_.leaky_slope));
    }
    return tape.concat_cols(cols);
  }

  // Exponential blend with the frozen target, then the copy step:
  // eta = gamma^n, blended = (tau*eta)/(tau*eta+1-tau) * a + (1-tau)/(tau*eta+1-tau) * theta.
  // Per-batch mode afterwards sets tau *= eta, theta <- batch mean of
  // blended, n += 1; per-epoch mode accumulates the mean and defers the
  // state update to pwc_commit_epoch(). theta contributes as a constant: no
  // gradient reaches it.
  ValueId pwc_blend_and_copy(Tape<T>& tape, ValueId raw_weights, std::span<const int32_t> users,
                             bool training) {
    if (!training)
      throw ContractError("pwc_blend_and_copy: evaluation must read theta directly");
    auto& st = pwc_state_;
    const size_t rows = tape.value(raw_weights).rows();
    if (rows != users.size()) throw ContractError("pwc_blend_and_copy: batch size mismatch");
    const double eta = std::pow(st.gamma, static_cast<double>(st.n));
    const double denom = st.tau * eta + 1.0 - st.tau;
    const double c_a = st.tau * eta / denom;
    const double c_theta = (1.0 - st.tau) / denom;

    Tensor<T> offset;
    const bool global = cfg_.pwc.scope == PwcConfig::ThetaScope::kGlobal;
    if (global) {
      offset = Tensor<T>(1, chunks_);
      for (size_t b = 0; b < chunks_; ++b)
        offset(0, b) = static_cast<T>(c_theta) * st.theta(0, b);
    } else {
      offset = Tensor<T>(rows, chunks_);
      for (size_t r = 0; r < rows; ++r)
        for (size_t b = 0; b < chunks_; ++b)
          offset(r, b) = static_cast<T>(c_theta) * st.theta(users[r], b);
    }
    const ValueId blended = tape.scale_add_const(raw_weights, static_cast<T>(c_a), std::move(offset));

    const auto& bl = tape.value(blended);
    if (cfg_.pwc.update == PwcConfig::Update::kPerEpoch) {
      ensure_epoch_acc();
      for (size_t r = 0; r < rows; ++r) {
        const size_t slot = global ? 0 : static_cast<size_t>(users[r]);
        for (size_t b = 0; b < chunks_; ++b)
          st.epoch_acc(slot, b) += static_cast<double>(bl(r, b));
        st.epoch_rows[slot]++;
      }
      return blended;
    }

    st.tau *= eta;
    st.n += 1;
    if (global) {
      for (size_t b = 0; b < chunks_; ++b) {
        double s = 0.0;
        for (size_t r = 0; r < rows; ++r) s += static_cast<double>(bl(r, b));
        st.theta(0, b) = static_cast<T>(s / static_cast<double>(rows));
      }
    } else {
      // each user in the batch copies the mean of its own blended rows
      std::vector<int32_t> seen;
      std::vector<int32_t> count(num_users_, 0);
      for (size_t r = 0; r < rows; ++r) count[users[r]]++;
      std::vector<std::vector<double>> acc;
      std::vector<int32_t> slot(num_users_, -1);
      for (size_t r = 0; r < rows; ++r) {
        const int32_t u = users[r];
        if (slot[u] < 0) {
          slot[u] = static_cast<int32_t>(acc.size());
          acc.emplace_back(chunks_, 0.0);
          seen.push_back(u);
        }
        for (size_t b = 0; b < chunks_; ++b) acc[slot[u]][b] += static_cast<double>(bl(r, b));
      }
      for (const int32_t u : seen)
        for (size_t b = 0; b < chunks_; ++b)
          st.theta(u, b) = static_cast<T>(acc[slot[u]][b] / count[u]);
    }
    return blended;
  }

  // Per-epoch mode: commit the accumulated epoch mean into theta and advance
  // the decay. No-op for per-batch mode or when nothing accumulated.
  void pwc_commit_epoch() {
    if (!cfg_.pwc.enabled || cfg_.pwc.update != PwcConfig::Update::kPerEpoch) return;
    auto& st = pwc_state_;
    if (st.epoch_acc.empty()) return;
    bool any = false;
    for (size_t row = 0; row < st.theta.rows(); ++row) {
      if (st.epoch_rows[row] == 0) continue;
      any = true;
      for (size_t b = 0; b < chunks_; ++b)
        st.theta(row, b) =
            static_cast<T>(st.epoch_acc(row, b) / static_cast<double>(st.epoch_rows[row]));
    }
    if (!any) return;
    const double eta = std::pow(st.gamma, static_cast<double>(st.n));
    st.tau *= eta;
    st.n += 1;
    st.epoch_acc.fill(0.0);
    std::fill(st.epoch_rows.begin(), st.epoch_rows.end(), 0);
  }

  // Chunk-wise reweighting of user rows; softmax over the B weights when
  // configured, raw weights otherwise.
  ValueId fuse_user(Tape<T>& tape, ValueId user_batch, ValueId weights) {
    const ValueId w = cfg_.pwc.softmax ? tape.softmax_rows(weights) : weights;
    return tape.scale_chunks(user_batch, w);
  }

  BatchRefs forward_batch(Tape<T>& tape, std::span<const int32_t> users,
                          std::span<const int32_t> pos, std::span<const int32_t> neg,
                          bool training) override {
    require_graphs();
    const ValueId x_tilde = assemble_items(tape);
    const auto [u_all, i_all] =
        forward_ui_gcn(tape, tape.leaf(user_emb_), x_tilde, *adj_, cfg_.l_ui);
    const ValueId h_items = forward_ii_gcn(tape, i_all, *item_graph_, cfg_.l_ii);
    const ValueId e_batch = tape.gather_rows(u_all, {users.begin(), users.end()});
    const ValueId h_pos = tape.gather_rows(h_items, {pos.begin(), pos.end()});
    const ValueId h_neg = tape.gather_rows(h_items, {neg.begin(), neg.end()});
    ValueId h_user;
    if (cfg_.pwc.enabled) {
      ValueId weights;
      if (training) {
        const ValueId raw = pwc_weights(tape, e_batch);
        weights = pwc_blend_and_copy(tape, raw, users, true);
      } else {
        weights = tape.constant(theta_logits(users));
      }
      h_user = fuse_user(tape, e_batch, weights);
    } else {
      h_user = tape.scale(e_batch, T(1) / static_cast<T>(chunks_));
    }
    return {h_user, h_pos, h_neg};
  }

  void eval_representations(Tensor<T>& users, Tensor<T>& items) override {
    require_graphs();
    Tape<T> tape;
    const ValueId x_tilde = assemble_items(tape);
    const auto [u_all, i_all] =
        forward_ui_gcn(tape, tape.leaf(user_emb_), x_tilde, *adj_, cfg_.l_ui);
    const ValueId h_items = forward_ii_gcn(tape, i_all, *item_graph_, cfg_.l_ii);
    items = tape.value(h_items);
    users = tape.value(u_all);
    if (cfg_.pwc.enabled) {
      // frozen theta as chunk logits; no state mutation here
      const bool global = cfg_.pwc.scope == PwcConfig::ThetaScope::kGlobal;
      std::vector<T> w(chunks_);
      for (size_t r = 0; r < users.rows(); ++r) {
        const size_t trow = global ? 0 : r;
        for (size_t b = 0; b < chunks_; ++b) w[b] = pwc_state_.theta(trow, b);
        if (cfg_.pwc.softmax) softmax_inplace(w);
        for (size_t b = 0; b < chunks_; ++b)
          for (size_t c = 0; c < cfg_.d; ++c) users(r, b * cfg_.d + c) *= w[b];
      }
    } else {
      const T w = T(1) / static_cast<T>(chunks_);
      for (size_t i = 0; i < users.size(); ++i) users.at(i) *= w;
    }
  }

  std::vector<Parameter<T>*> parameters() override {
    std::vector<Parameter<T>*> out{&user_emb_};
    for (auto& p : projectors_)
      for (auto* q : p.parameters()) out.push_back(q);
    for (auto* q : shared_projector_->parameters()) out.push_back(q);
    for (auto& e : chunk_encoders_)
      for (auto* q : e.parameters()) out.push_back(q);
    return out;
  }

  size_t num_users() const override { return num_users_; }
  size_t num_items() const override { return num_items_; }
  size_t latent_width() const { return width_; }
  size_t num_chunks() const { return chunks_; }
  const LirdrecConfig<T>& config() const { return cfg_; }
  PwcState<T>& pwc_state() { return pwc_state_; }
  Parameter<T>& user_table() { return user_emb_; }
  std::vector<FeatureProjector<T>>& modality_projectors() { return projectors_; }
  FeatureProjector<T>& shared_projector() { return *shared_projector_; }
  std::vector<ChunkEncoder<T>>& chunk_encoders() { return chunk_encoders_; }
  const Tensor<T>& raw_features(size_t m) const { return raw_features_[m]; }
  const Tensor<T>& shared_input() const { return shared_input_; }
  const BipartiteAdjacency<T>* adjacency() const { return adj_; }
  const Csr<T>* item_graph() const { return item_graph_; }

 private:
  void require_graphs() const {
    if (adj_ == nullptr || item_graph_ == nullptr)
      throw ContractError("LirdrecModel: graphs not attached");
  }

  void ensure_epoch_acc() {
    auto& st = pwc_state_;
    if (st.epoch_acc.rows() != st.theta.rows()) {
      st.epoch_acc = Tensor<double>(st.theta.rows(), chunks_);
      st.epoch_rows.assign(st.theta.rows(), 0);
    }
  }

  Tensor<T> theta_logits(std::span<const int32_t> users) const {
    Tensor<T> w(users.size(), chunks_);
    const bool global = cfg_.pwc.scope == PwcConfig::ThetaScope::kGlobal;
    for (size_t r = 0; r < users.size(); ++r)
      for (size_t b = 0; b < chunks_; ++b)
        w(r, b) = pwc_state_.theta(global ? 0 : users[r], b);
    return w;
  }

  static void softmax_inplace(std::vector<T>& v) {
    T mx = v[0];
    for (const T x : v) mx = std::max(mx, x);
    double s = 0.0;
    for (T& x : v) {
      x = static_cast<T>(std::exp(static_cast<double>(x - mx)));
      s += x;
    }
    for (T& x : v) x = static_cast<T>(x / s);
  }

  LirdrecConfig<T> cfg_;
  size_t num_users_, num_items_, chunks_, width_;
  Rng rng_;
  Parameter<T> user_emb_;
  std::vector<std::string> modality_ids_;
  std::vector<Tensor<T>> raw_features_;
  Tensor<T> shared_input_;
  std::vector<FeatureProjector<T>> projectors_;
  std::unique_ptr<FeatureProjector<T>> shared_projector_;
  std::vector<ChunkEncoder<T>> chunk_encoders_;
  PwcState<T> pwc_state_;
  const BipartiteAdjacency<T>* adj_ = nullptr;
  const Csr<T>* item_graph_ = nullptr;
};

}  // namespace lirdrec
