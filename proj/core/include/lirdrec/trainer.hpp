#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lirdrec/adam.hpp"
#include "lirdrec/evaluation.hpp"
#include "lirdrec/model.hpp"
#include "lirdrec/ranking_model.hpp"
#include "lirdrec/sampler.hpp"

namespace lirdrec {

struct TrainConfig {
  double lr = 1e-3;
  size_t batch_size = 2048;
  int max_epochs = 1000;
  int patience = 20;  // validation rounds without improvement before stopping
  double lambda = 1e-4;
  bool reg_negative = false;  // include the negative item's representation in the penalty
  uint64_t seed = 42;
  std::vector<int> eval_ks{10, 20};
  int primary_k = 20;  // early stopping watches Recall at this k
  bool check_finite = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_recall = 0.0;
  double val_ndcg = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double best_recall = 0.0;
  bool diverged = false;
};

// Mean BPR loss over the batch plus the representation penalty
// lambda * mean over rows of (|H_u|^2 + |H_i|^2 [+ |H_j|^2]).
template <typename T>
ValueId compute_loss(Tape<T>& tape, RankingModel<T>& model, const BprBatch& batch, double lambda,
                     bool reg_negative, bool training) {
  const BatchRefs refs = model.forward_batch(tape, batch.users, batch.pos, batch.neg, training);
  const ValueId z = tape.sub(tape.dot_rows(refs.h_user, refs.h_pos),
                             tape.dot_rows(refs.h_user, refs.h_neg));
  ValueId loss = tape.mean_all(tape.softplus_neg(z));
  if (lambda != 0.0) {
    ValueId reg = tape.add(tape.mean_row_sumsq(refs.h_user), tape.mean_row_sumsq(refs.h_pos));
    if (reg_negative) reg = tape.add(reg, tape.mean_row_sumsq(refs.h_neg));
    loss = tape.add_scaled(loss, reg, static_cast<T>(lambda));
  }
  return loss;
}

namespace detail {

template <typename T>
struct ModelSnapshot {
  std::vector<Tensor<T>> values;
  std::optional<PwcState<T>> pwc;

  static ModelSnapshot capture(RankingModel<T>& model) {
    ModelSnapshot s;
    for (const auto* p : model.parameters()) s.values.push_back(p->value);
    if (auto* lird = dynamic_cast<LirdrecModel<T>*>(&model); lird && lird->config().pwc.enabled)
      s.pwc = lird->pwc_state();
    return s;
  }

  void restore(RankingModel<T>& model) const {
    auto params = model.parameters();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    if (pwc.has_value())
      if (auto* lird = dynamic_cast<LirdrecModel<T>*>(&model)) lird->pwc_state() = *pwc;
  }
};

}  // namespace detail

// Epoch loop with per-epoch validation, early stopping on Recall@primary_k,
// and best-checkpoint retention. A non-finite training loss aborts the run
// and restores the best snapshot seen so far.
template <typename T>
FitResult fit(RankingModel<T>& model, const Dataset& ds, const TrainConfig& cfg,
              const std::function<void(const EpochRecord&)>& on_epoch = {},
              const std::type_identity_t<std::function<void(Tape<T>&, const BprBatch&)>>&
                  after_backward = {}) {
  BprSampler sampler(ds, cfg.seed);
  AdamOptimizer<T> adam(AdamConfig{.lr = cfg.lr});
  const auto params = model.parameters();

  FitResult result;
  auto best = detail::ModelSnapshot<T>::capture(model);
  int rounds_without_improvement = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    sampler.start_epoch();
    double loss_sum = 0.0;
    size_t batches = 0;
    BprBatch batch;
    while (sampler.next_batch(cfg.batch_size, batch)) {
      Tape<T> tape;
      tape.set_check_finite(cfg.check_finite);
      const ValueId loss = compute_loss(tape, model, batch, cfg.lambda, cfg.reg_negative, true);
      const double value = static_cast<double>(tape.value(loss)(0, 0));
      if (!std::isfinite(value)) {
        best.restore(model);
        result.diverged = true;
        return result;
      }
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
      if (after_backward) after_backward(tape, batch);
      adam.step(params);
      loss_sum += value;
      ++batches;
    }
    if (auto* lird = dynamic_cast<LirdrecModel<T>*>(&model)) lird->pwc_commit_epoch();

    const MetricsReport report = evaluate(model, ds, Split::valid, cfg.eval_ks);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.val_recall = report.at(cfg.primary_k).recall;
    rec.val_ndcg = report.at(cfg.primary_k).ndcg;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_recall > result.best_recall || result.best_epoch < 0) {
      result.best_recall = rec.val_recall;
      result.best_epoch = epoch;
      best = detail::ModelSnapshot<T>::capture(model);
      rounds_without_improvement = 0;
    } else {
      ++rounds_without_improvement;
      if (rounds_without_improvement >= cfg.patience) break;
    }
  }

  best.restore(model);
  return result;
}

}  // namespace lirdrec
