#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lirdrec/baselines.hpp"
#include "lirdrec/trainer.hpp"

namespace lirdrec {

// ---- synthetic data for the gradient-bias experiments ----------------------

struct SyntheticSpec {
  int32_t users = 200;
  int32_t items = 100;
  double density = 0.01;
  std::vector<size_t> feature_dims{32, 16};
  uint64_t seed = 1;
};

struct SyntheticData {
  Dataset dataset;  // all records labeled train
  std::vector<FeatureMatrix> features;
};

// Uniform random bipartite edges; feature matrices drawn standard normal.
inline SyntheticData make_sparse_bipartite(const SyntheticSpec& spec) {
  SyntheticData out;
  Dataset& ds = out.dataset;
  ds.num_users = spec.users;
  ds.num_items = spec.items;
  for (int32_t u = 0; u < spec.users; ++u) {
    ds.user_ids.push_back("u" + std::to_string(u));
    ds.user_index.emplace(ds.user_ids.back(), u);
  }
  for (int32_t i = 0; i < spec.items; ++i) {
    ds.item_ids.push_back("i" + std::to_string(i));
    ds.item_index.emplace(ds.item_ids.back(), i);
  }
  Rng rng(spec.seed);
  const auto total = static_cast<uint64_t>(spec.users) * spec.items;
  auto target = static_cast<uint64_t>(std::llround(spec.density * static_cast<double>(total)));
  target = std::min(target, total);
  std::vector<uint8_t> taken(total, 0);
  uint64_t placed = 0;
  while (placed < target) {
    const uint64_t cell = rng.uniform_index(total);
    if (taken[cell]) continue;
    taken[cell] = 1;
    ++placed;
    ds.records.push_back({static_cast<int32_t>(cell / spec.items),
                          static_cast<int32_t>(cell % spec.items), Split::train});
  }
  for (size_t m = 0; m < spec.feature_dims.size(); ++m) {
    FeatureMatrix f;
    f.modality_id = "synthetic" + std::to_string(m);
    f.values = Tensor<float>::randn(spec.items, spec.feature_dims[m], rng);
    out.features.push_back(std::move(f));
  }
  return out;
}

// ---- VBPR loss decomposition ------------------------------------------------

struct VbprLossDecomposition {
  double total = 0.0;
  double id_loss = 0.0;  // mean -ln sigmoid(id_i - id_j)
  double mm_loss = 0.0;  // mean -ln sigmoid(mm_i - mm_j)
};

// Early fusion makes the components non-additive; total is the standard BPR
// loss on full scores.
template <typename T>
VbprLossDecomposition decompose_vbpr_loss(const VbprModel<T>& model, const BprBatch& batch) {
  VbprLossDecomposition out;
  auto& m = const_cast<VbprModel<T>&>(model);
  for (size_t k = 0; k < batch.size(); ++k) {
    double id_i, mm_i, id_j, mm_j;
    m.score_breakdown(batch.users[k], batch.pos[k], &id_i, &mm_i);
    m.score_breakdown(batch.users[k], batch.neg[k], &id_j, &mm_j);
    out.total += detail::stable_softplus_neg((id_i + mm_i) - (id_j + mm_j));
    out.id_loss += detail::stable_softplus_neg(id_i - id_j);
    out.mm_loss += detail::stable_softplus_neg(mm_i - mm_j);
  }
  const double n = static_cast<double>(batch.size());
  out.total /= n;
  out.id_loss /= n;
  out.mm_loss /= n;
  return out;
}

// ---- early-training gradient disparity --------------------------------------

struct DisparitySeries {
  std::vector<double> id_norms;  // per epoch
  std::vector<double> mm_norms;
};

// Per-epoch accumulated gradient norms for the two item pathways, following
// the per-edge aggregation of the analysis: the shared projection W
// accumulates its positive-pathway gradient over all train triples
// (Frobenius norm reported); item ID rows accumulate per item and the mean
// row norm over interacted items is reported. Gradients are taken before the
// optimizer step; the penalty term is disabled so the account is pure BPR.
//
// With apply_updates = false the sampler is re-seeded every epoch, so the
// accumulation measures a fixed gradient field deterministically.
template <typename T>
DisparitySeries gradient_disparity(VbprModel<T>& model, const Dataset& ds, const TrainConfig& cfg,
                                   int epochs, bool apply_updates = true) {
  AdamOptimizer<T> adam(AdamConfig{.lr = cfg.lr});
  const auto params = model.parameters();
  const size_t dim = model.id_item().value.cols();
  const size_t feat_dim = model.features().cols();

  std::vector<int32_t> item_degree(ds.num_items, 0);
  for (const auto& r : ds.records)
    if (r.split == Split::train) item_degree[r.item]++;

  DisparitySeries out;
  std::optional<BprSampler> continuing;
  if (apply_updates) continuing.emplace(ds, cfg.seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::optional<BprSampler> per_epoch;
    if (!apply_updates) per_epoch.emplace(ds, cfg.seed);
    BprSampler* sampler = apply_updates ? &*continuing : &*per_epoch;
    sampler->start_epoch();

    Tensor<double> acc_w(feat_dim, dim);
    Tensor<double> acc_id(ds.num_items, dim);
    BprBatch batch;
    while (sampler->next_batch(cfg.batch_size, batch)) {
      Tape<T> tape;
      const ValueId loss = compute_loss(tape, model, batch, 0.0, false, true);
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
      const auto& nodes = model.last_batch_nodes();
      const auto& g_id = tape.grad(nodes.id_pos);
      const auto& g_mm = tape.grad(nodes.mm_pos);
      const double scale = static_cast<double>(batch.size());  // undo the batch mean
      for (size_t k = 0; k < batch.size(); ++k) {
        const int32_t item = batch.pos[k];
        for (size_t c = 0; c < dim; ++c)
          acc_id(item, c) += scale * static_cast<double>(g_id(k, c));
        for (size_t f = 0; f < feat_dim; ++f) {
          const double x = static_cast<double>(model.features()(item, f));
          if (x == 0.0) continue;
          for (size_t c = 0; c < dim; ++c)
            acc_w(f, c) += scale * x * static_cast<double>(g_mm(k, c));
        }
      }
      if (apply_updates) adam.step(params);
    }

    out.mm_norms.push_back(acc_w.frobenius_norm());
    double sum = 0.0;
    size_t cnt = 0;
    for (int32_t i = 0; i < ds.num_items; ++i) {
      if (item_degree[i] == 0) continue;
      double s = 0.0;
      for (size_t c = 0; c < dim; ++c) s += acc_id(i, c) * acc_id(i, c);
      sum += std::sqrt(s);
      ++cnt;
    }
    out.id_norms.push_back(cnt > 0 ? sum / static_cast<double>(cnt) : 0.0);
  }
  return out;
}

// Independent second entry for the same accounting: analytic per-triple
// gradients (sigma(z)-1 times the paired factor) accumulated directly,
// without the tape. Parameters stay frozen.
template <typename T>
DisparitySeries gradient_disparity_reference(VbprModel<T>& model, const Dataset& ds,
                                             const TrainConfig& cfg, int epochs) {
  const size_t dim = model.id_item().value.cols();
  const size_t feat_dim = model.features().cols();
  std::vector<int32_t> item_degree(ds.num_items, 0);
  for (const auto& r : ds.records)
    if (r.split == Split::train) item_degree[r.item]++;

  DisparitySeries out;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    BprSampler sampler(ds, cfg.seed);
    sampler.start_epoch();
    Tensor<double> acc_w(feat_dim, dim);
    Tensor<double> acc_id(ds.num_items, dim);
    BprBatch batch;
    while (sampler.next_batch(cfg.batch_size, batch)) {
      for (size_t k = 0; k < batch.size(); ++k) {
        const int32_t u = batch.users[k], i = batch.pos[k], j = batch.neg[k];
        double id_i, mm_i, id_j, mm_j;
        model.score_breakdown(u, i, &id_i, &mm_i);
        model.score_breakdown(u, j, &id_j, &mm_j);
        const double z = (id_i + mm_i) - (id_j + mm_j);
        const double g = -static_cast<double>(detail::sigmoid_neg(z));  // sigma(z) - 1
        for (size_t c = 0; c < dim; ++c)
          acc_id(i, c) += g * static_cast<double>(model.id_user().value(u, c));
        for (size_t f = 0; f < feat_dim; ++f) {
          const double x = static_cast<double>(model.features()(i, f));
          if (x == 0.0) continue;
          for (size_t c = 0; c < dim; ++c)
            acc_w(f, c) += g * x * static_cast<double>(model.pref_user().value(u, c));
        }
      }
    }
    out.mm_norms.push_back(acc_w.frobenius_norm());
    double sum = 0.0;
    size_t cnt = 0;
    for (int32_t i = 0; i < ds.num_items; ++i) {
      if (item_degree[i] == 0) continue;
      double s = 0.0;
      for (size_t c = 0; c < dim; ++c) s += acc_id(i, c) * acc_id(i, c);
      sum += std::sqrt(s);
      ++cnt;
    }
    out.id_norms.push_back(cnt > 0 ? sum / static_cast<double>(cnt) : 0.0);
  }
  return out;
}

// ---- startup curves ----------------------------------------------------------

struct StartupCurve {
  std::string model_name;
  std::vector<double> val_recall;  // one value per epoch, shared seed/splits
};

template <typename T>
std::vector<StartupCurve> startup_curve(
    const std::vector<std::pair<std::string, RankingModel<T>*>>& models, const Dataset& ds,
    int epochs, TrainConfig cfg) {
  cfg.max_epochs = epochs;
  cfg.patience = epochs + 1;  // run every epoch; no early stop
  std::vector<StartupCurve> out;
  for (const auto& [name, model] : models) {
    StartupCurve curve;
    curve.model_name = name;
    fit(*model, ds, cfg,
        [&curve](const EpochRecord& r) { curve.val_recall.push_back(r.val_recall); });
    out.push_back(std::move(curve));
  }
  return out;
}

}  // namespace lirdrec
