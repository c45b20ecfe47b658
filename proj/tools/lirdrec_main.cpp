// lirdrec command-line driver: preprocess -> build-graph -> train -> eval,
// plus coldstart/diagnose/grid pipelines. Every run writes run.json with the
// resolved config and content hashes of its inputs so runs can be replayed.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lirdrec/baselines.hpp"
#include "lirdrec/checkpoint.hpp"
#include "lirdrec/config.hpp"
#include "lirdrec/dct.hpp"
#include "lirdrec/diagnostics.hpp"
#include "lirdrec/evaluation.hpp"
#include "lirdrec/graphs.hpp"
#include "lirdrec/model.hpp"
#include "lirdrec/trainer.hpp"

namespace fs = std::filesystem;
using namespace lirdrec;

namespace {

struct RunContext {
  std::string subcommand;
  AppConfig cfg;
  fs::path out;
  std::map<std::string, std::string> input_hashes;
  std::vector<std::string> outputs;

  void note_input(const std::string& path) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash_file(path)));
    input_hashes[path] = hex;
  }

  std::string out_path(const std::string& name) {
    const std::string p = (out / name).string();
    outputs.push_back(p);
    return p;
  }

  void write_run_json() {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["config"] = nlohmann::json::parse(config_to_json(cfg));
    j["inputs"] = input_hashes;
    j["outputs"] = outputs;
    std::ofstream f(out / "run.json");
    f << j.dump(2) << "\n";
  }
};

RunContext make_context(const std::string& sub, const std::string& config_path,
                        const std::string& out_dir, int64_t seed, int threads) {
  RunContext ctx;
  ctx.subcommand = sub;
  ctx.cfg = parse_config_file(config_path);
  if (seed >= 0) ctx.cfg.train.seed = static_cast<uint64_t>(seed);
  if (threads >= 0) ctx.cfg.threads = threads;
  apply_fusion_defaults(ctx.cfg);
  if (ctx.cfg.threads > 0) set_max_threads(ctx.cfg.threads);
  ctx.out = out_dir;
  fs::create_directories(ctx.out);
  return ctx;
}

Dataset load_split_dataset(RunContext& ctx) {
  const auto& d = ctx.cfg.data;
  if (d.interactions.empty())
    throw ConfigError("config: data.interactions: required for this subcommand");
  ctx.note_input(d.interactions);
  LoadOptions opts;
  opts.dedup = d.dedup;
  Dataset ds = load_interactions(d.interactions, opts);
  if (d.split_mode == "random")
    ds = split_random(ds, d.ratios, d.split_seed);
  else if (d.split_mode == "coldstart")
    ds = split_cold_start(ds, d.holdout, d.split_seed);
  return ds;  // presplit keeps the file's labels
}

std::vector<FeatureMatrix> load_raw_features(RunContext& ctx, const Dataset& ds) {
  if (ctx.cfg.data.features.empty())
    throw ConfigError("config: data.features: at least one modality is required");
  std::vector<FeatureMatrix> out;
  for (const auto& f : ctx.cfg.data.features) {
    ctx.note_input(f.path);
    FeatureMatrix m = load_features(f.path, f.modality);
    if (m.rows() != static_cast<size_t>(ds.num_items))
      throw ContractError("feature file " + f.path + " has " + std::to_string(m.rows()) +
                          " rows, dataset has " + std::to_string(ds.num_items) + " items");
    out.push_back(std::move(m));
  }
  return out;
}

std::string hex64(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t adjacency_tag(const RunContext& ctx) {
  const auto& d = ctx.cfg.data;
  std::ostringstream s;
  s << "adj|" << hex64(hash_file(d.interactions)) << "|" << d.split_mode << "|" << d.ratios[0]
    << "," << d.ratios[1] << "," << d.ratios[2] << "|" << d.holdout << "|" << d.split_seed << "|"
    << d.dedup;
  return fnv1a64(s.str());
}

uint64_t item_graph_tag(const RunContext& ctx) {
  std::ostringstream s;
  s << "iig|k=" << ctx.cfg.graph.knn_k;
  for (size_t m = 0; m < ctx.cfg.data.features.size(); ++m)
    s << "|" << ctx.cfg.data.features[m].modality << "="
      << hex64(hash_file(ctx.cfg.data.features[m].path)) << "*" << ctx.cfg.graph.fusion_weights[m];
  return fnv1a64(s.str());
}

void require_cache(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw FormatError("missing cache file " + path + "; run `lirdrec " + producer + "` first");
}

// ---- csv writers -------------------------------------------------------------

class TrainLogCsv {
 public:
  explicit TrainLogCsv(const std::string& path) : out_(path) {
    out_ << "epoch,split,metric,k,value,wallclock_s\n";
  }
  void epoch_row(const EpochRecord& r, int k) {
    out_ << r.epoch << ",train,loss,," << r.train_loss << "," << r.seconds << "\n";
    out_ << r.epoch << ",valid,recall," << k << "," << r.val_recall << "," << r.seconds << "\n";
    out_ << r.epoch << ",valid,ndcg," << k << "," << r.val_ndcg << "," << r.seconds << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_report_csv(const std::string& path, const MetricsReport& report,
                      const std::string& split_name, double wall_s) {
  std::ofstream out(path, std::ios::app);
  if (out.tellp() == 0) out << "epoch,split,metric,k,value,wallclock_s\n";
  for (const auto& e : report.entries) {
    out << "0," << split_name << ",recall," << e.k << "," << e.recall << "," << wall_s << "\n";
    out << "0," << split_name << ",ndcg," << e.k << "," << e.ndcg << "," << wall_s << "\n";
  }
}

// ---- model assembly ----------------------------------------------------------

template <typename T>
struct BuiltModel {
  std::unique_ptr<RankingModel<T>> model;
  // graphs owned here so the model's raw pointers stay valid
  std::unique_ptr<BipartiteAdjacency<T>> adj;
  std::unique_ptr<Csr<T>> item_graph;
  LirdrecModel<T>* lirdrec = nullptr;
};

template <typename T>
Tensor<T> concat_features(const std::vector<FeatureMatrix>& feats) {
  size_t width = 0;
  for (const auto& f : feats) width += f.cols();
  Tensor<T> out(feats[0].rows(), width);
  size_t off = 0;
  for (const auto& f : feats) {
    for (size_t r = 0; r < f.rows(); ++r)
      for (size_t c = 0; c < f.cols(); ++c) out(r, off + c) = static_cast<T>(f.values(r, c));
    off += f.cols();
  }
  return out;
}

template <typename T>
LirdrecConfig<T> lirdrec_config(const ModelConfig& m) {
  LirdrecConfig<T> cfg;
  cfg.d = static_cast<size_t>(m.d);
  cfg.d1 = static_cast<size_t>(m.d1);
  cfg.l_ui = m.l_ui;
  cfg.l_ii = m.l_ii;
  cfg.leaky_slope = static_cast<T>(m.leaky_slope);
  cfg.pwc.enabled = m.pwc_enabled;
  cfg.pwc.softmax = m.pwc_softmax;
  cfg.pwc.scope = m.pwc_theta_scope == "per_user" ? PwcConfig::ThetaScope::kPerUser
                                                  : PwcConfig::ThetaScope::kGlobal;
  cfg.pwc.update = m.pwc_update == "epoch" ? PwcConfig::Update::kPerEpoch
                                           : PwcConfig::Update::kPerBatch;
  cfg.pwc.tau0 = m.tau0;
  cfg.pwc.gamma = m.gamma;
  cfg.pwc.d_h = static_cast<size_t>(m.d_h);
  return cfg;
}

// caches_dir empty means "compute in memory" (coldstart/diagnose pipelines).
template <typename T>
BuiltModel<T> build_model(RunContext& ctx, const Dataset& ds, const std::string& caches_dir) {
  BuiltModel<T> built;
  const auto& mc = ctx.cfg.model;
  const uint64_t seed = ctx.cfg.train.seed;

  if (mc.name == "mf") {
    built.model = std::make_unique<MfModel<T>>(ds.num_users, ds.num_items, mc.d, seed);
    return built;
  }
  if (mc.name == "lightgcn") {
    built.adj = std::make_unique<BipartiteAdjacency<T>>(build_norm_adjacency<T>(ds));
    auto m = std::make_unique<LightGcnModel<T>>(ds.num_users, ds.num_items, mc.d,
                                                mc.lightgcn_layers, seed);
    m->attach_graphs(built.adj.get());
    built.model = std::move(m);
    return built;
  }

  const std::vector<FeatureMatrix> raw = load_raw_features(ctx, ds);
  if (mc.name == "vbpr") {
    built.model = std::make_unique<VbprModel<T>>(ds.num_users, ds.num_items,
                                                 concat_features<T>(raw), mc.d, seed);
    return built;
  }

  // lirdrec
  std::vector<typename LirdrecModel<T>::ModalityInput> modalities;
  if (!caches_dir.empty()) {
    for (const auto& f : raw) {
      const std::string dct_path = (fs::path(caches_dir) / ("dct_" + f.modality_id + ".fmx")).string();
      require_cache(dct_path, "preprocess");
      ctx.note_input(dct_path);
      const FeatureMatrix dct_f = load_features(dct_path, "dct:" + f.modality_id);
      if (dct_f.rows() != f.rows() || dct_f.cols() != f.cols())
        throw ContractError("DCT cache " + dct_path + " shape does not match " + f.modality_id +
                            " features; re-run `lirdrec preprocess`");
      typename LirdrecModel<T>::ModalityInput in;
      in.id = f.modality_id;
      in.raw = tensor_cast<T>(f.values);
      in.dct = tensor_cast<T>(dct_f.values);
      modalities.push_back(std::move(in));
    }
    const std::string adj_path = (fs::path(caches_dir) / "adjacency.grx").string();
    const std::string iig_path = (fs::path(caches_dir) / "item_graph.grx").string();
    require_cache(adj_path, "build-graph");
    require_cache(iig_path, "build-graph");
    ctx.note_input(adj_path);
    ctx.note_input(iig_path);
    uint64_t tag = 0;
    const Csr<float> adj_f = load_graph(adj_path, &tag);
    if (tag != adjacency_tag(ctx))
      throw ContractError("cache " + adj_path +
                          " was built from different inputs; re-run `lirdrec build-graph`");
    const Csr<float> iig_f = load_graph(iig_path, &tag);
    if (tag != item_graph_tag(ctx))
      throw ContractError("cache " + iig_path +
                          " was built from different inputs; re-run `lirdrec build-graph`");
    built.adj = std::make_unique<BipartiteAdjacency<T>>();
    built.adj->user_to_item = csr_cast<T>(adj_f);
    built.adj->item_to_user = built.adj->user_to_item.transposed();
    built.item_graph = std::make_unique<Csr<T>>(csr_cast<T>(iig_f));
  } else {
    for (const auto& f : raw) {
      typename LirdrecModel<T>::ModalityInput in;
      in.id = f.modality_id;
      in.raw = tensor_cast<T>(f.values);
      in.dct = tensor_cast<T>(dct2(tensor_cast<double>(f.values)));
      modalities.push_back(std::move(in));
    }
    built.adj = std::make_unique<BipartiteAdjacency<T>>(build_norm_adjacency<T>(ds));
    std::vector<const FeatureMatrix*> ptrs;
    for (const auto& f : raw) ptrs.push_back(&f);
    built.item_graph = std::make_unique<Csr<T>>(
        build_item_item_graph<T>(std::span<const FeatureMatrix* const>(ptrs.data(), ptrs.size()),
                                 ctx.cfg.graph.knn_k, ctx.cfg.graph.fusion_weights)
            .matrix);
  }
  auto m = std::make_unique<LirdrecModel<T>>(ds.num_users, ds.num_items, std::move(modalities),
                                             lirdrec_config<T>(mc), seed);
  m->attach_graphs(built.adj.get(), built.item_graph.get());
  built.lirdrec = m.get();
  built.model = std::move(m);
  return built;
}

TrainConfig train_config(const AppConfig& cfg) {
  TrainConfig t;
  t.lr = cfg.train.lr;
  t.batch_size = static_cast<size_t>(cfg.train.batch_size);
  t.max_epochs = cfg.train.max_epochs;
  t.patience = cfg.train.patience;
  t.lambda = cfg.train.lambda;
  t.reg_negative = cfg.train.reg_negative;
  t.seed = cfg.train.seed;
  t.eval_ks = cfg.eval.ks;
  t.primary_k = cfg.eval.ks.back();
  return t;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_preprocess(RunContext& ctx) {
  const Dataset ds = load_split_dataset(ctx);
  const std::vector<FeatureMatrix> raw = load_raw_features(ctx, ds);
  for (const auto& f : raw) {
    const Tensor<double> transformed = dct2(tensor_cast<double>(f.values));
    FeatureMatrix out;
    out.modality_id = "dct:" + f.modality_id;
    out.values = tensor_cast<float>(transformed);
    const std::string path = ctx.out_path("dct_" + f.modality_id + ".fmx");
    store_features(out, path);
    std::cout << "preprocess: wrote " << path << " (" << out.rows() << "x" << out.cols() << ")\n";
  }
  ctx.write_run_json();
  return 0;
}

int cmd_build_graph(RunContext& ctx) {
  const Dataset ds = load_split_dataset(ctx);
  const std::vector<FeatureMatrix> raw = load_raw_features(ctx, ds);

  const auto adj = build_norm_adjacency<float>(ds);
  if (adj.isolated_users + adj.isolated_items > 0)
    std::cerr << "warning: " << adj.isolated_users << " isolated user(s) and "
              << adj.isolated_items << " isolated item(s) propagate nothing\n";
  const std::string adj_path = ctx.out_path("adjacency.grx");
  store_graph(adj.user_to_item, adjacency_tag(ctx), adj_path);
  std::cout << "build-graph: wrote " << adj_path << " (nnz " << adj.user_to_item.nnz() << ")\n";

  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& f : raw) ptrs.push_back(&f);
  const auto iig =
      build_item_item_graph<float>(std::span<const FeatureMatrix* const>(ptrs.data(), ptrs.size()),
                                   ctx.cfg.graph.knn_k, ctx.cfg.graph.fusion_weights);
  const std::string iig_path = ctx.out_path("item_graph.grx");
  store_graph(iig.matrix, item_graph_tag(ctx), iig_path);
  std::cout << "build-graph: wrote " << iig_path << " (nnz " << iig.matrix.nnz() << ")\n";
  ctx.write_run_json();
  return 0;
}

template <typename T>
int run_train(RunContext& ctx, const std::string& caches_dir) {
  const Dataset ds = load_split_dataset(ctx);
  BuiltModel<T> built = build_model<T>(ctx, ds, caches_dir);
  const TrainConfig tcfg = train_config(ctx.cfg);

  TrainLogCsv log(ctx.out_path("train_log.csv"));
  const FitResult result = fit(*built.model, ds, tcfg, [&](const EpochRecord& r) {
    log.epoch_row(r, tcfg.primary_k);
    std::cout << "epoch " << r.epoch << " loss " << r.train_loss << " valid R@" << tcfg.primary_k
              << " " << r.val_recall << "\n";
  });

  CheckpointMeta meta;
  meta.model_name = ctx.cfg.model.name;
  meta.config_json = config_to_json(ctx.cfg);
  meta.dataset_hash = hash_file(ctx.cfg.data.interactions);
  const std::string ckpt = ctx.out_path("checkpoint.ckpt");
  save_checkpoint(*built.model, meta, ckpt);
  ctx.outputs.push_back(ckpt + ".json");
  ctx.write_run_json();

  if (result.diverged) {
    std::cerr << "training diverged (non-finite loss); best checkpoint kept at " << ckpt << "\n";
    return 4;
  }
  std::cout << "best epoch " << result.best_epoch << " valid R@" << tcfg.primary_k << " "
            << result.best_recall << "\n";
  return 0;
}

template <typename T>
int run_eval(RunContext& ctx, const std::string& checkpoint, const std::string& caches_dir,
             const std::string& split_name, const std::vector<int>& ks_override) {
  if (checkpoint.empty() || !fs::exists(checkpoint) || !fs::exists(checkpoint + ".json"))
    throw FormatError("no checkpoint at '" + checkpoint + "'; run `lirdrec train` first");
  const CheckpointMeta meta = read_checkpoint_sidecar(checkpoint + ".json");
  ctx.cfg = parse_config_text(meta.config_json, checkpoint + ".json");
  apply_fusion_defaults(ctx.cfg);
  if (!ks_override.empty()) ctx.cfg.eval.ks = ks_override;  // explicit --k wins
  ctx.note_input(checkpoint);

  const Dataset ds = load_split_dataset(ctx);
  BuiltModel<T> built = build_model<T>(ctx, ds, caches_dir);
  load_checkpoint(*built.model, checkpoint);

  const Split split = split_name == "valid" ? Split::valid : Split::test;
  const auto t0 = std::chrono::steady_clock::now();
  const MetricsReport report = evaluate(*built.model, ds, split, ctx.cfg.eval.ks);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string path = ctx.out_path("report.csv");
  write_report_csv(path, report, split_name, wall);
  for (const auto& e : report.entries)
    std::cout << split_name << " R@" << e.k << " " << e.recall << " N@" << e.k << " " << e.ndcg
              << "\n";
  std::cout << "users evaluated " << report.users_evaluated << ", skipped "
            << report.users_skipped << "\n";
  ctx.write_run_json();
  return 0;
}

template <typename T>
int run_coldstart(RunContext& ctx) {
  ctx.cfg.data.split_mode = "coldstart";
  const Dataset ds = load_split_dataset(ctx);
  store_interactions(ds, ctx.out_path("split.tsv"));

  BuiltModel<T> built = build_model<T>(ctx, ds, "");
  const TrainConfig tcfg = train_config(ctx.cfg);
  TrainLogCsv log(ctx.out_path("train_log.csv"));
  const FitResult result = fit(*built.model, ds, tcfg,
                               [&](const EpochRecord& r) { log.epoch_row(r, tcfg.primary_k); });

  CheckpointMeta meta;
  meta.model_name = ctx.cfg.model.name;
  meta.config_json = config_to_json(ctx.cfg);
  meta.dataset_hash = hash_file(ctx.cfg.data.interactions);
  save_checkpoint(*built.model, meta, ctx.out_path("checkpoint.ckpt"));

  const MetricsReport valid = evaluate(*built.model, ds, Split::valid, ctx.cfg.eval.ks);
  const MetricsReport test = evaluate(*built.model, ds, Split::test, ctx.cfg.eval.ks);
  const std::string path = ctx.out_path("report.csv");
  write_report_csv(path, valid, "valid", 0.0);
  write_report_csv(path, test, "test", 0.0);
  for (const auto& e : test.entries)
    std::cout << "coldstart test R@" << e.k << " " << e.recall << " N@" << e.k << " " << e.ndcg
              << "\n";
  ctx.write_run_json();
  return result.diverged ? 4 : 0;
}

Dataset synthetic_split_dataset(int32_t users, int32_t items, int per_user, uint64_t seed) {
  // fixed per-user interaction count so the 8:1:1 split precondition holds
  Rng rng(seed);
  Dataset ds;
  ds.num_users = users;
  ds.num_items = items;
  for (int32_t u = 0; u < users; ++u) {
    ds.user_ids.push_back("u" + std::to_string(u));
    ds.user_index.emplace(ds.user_ids.back(), u);
  }
  for (int32_t i = 0; i < items; ++i) {
    ds.item_ids.push_back("i" + std::to_string(i));
    ds.item_index.emplace(ds.item_ids.back(), i);
  }
  std::vector<int32_t> pool(items);
  std::iota(pool.begin(), pool.end(), 0);
  for (int32_t u = 0; u < users; ++u) {
    for (size_t i = pool.size() - 1; i > 0; --i)
      std::swap(pool[i], pool[rng.uniform_index(i + 1)]);
    for (int k = 0; k < per_user; ++k) ds.records.push_back({u, pool[k], Split::train});
  }
  return split_random(ds, {0.8, 0.1, 0.1}, seed + 1);
}

int cmd_diagnose(RunContext& ctx, const std::string& kind, int epochs, bool synthetic) {
  std::ofstream csv(ctx.out_path("diagnose_" + kind + ".csv"));
  csv << "epoch,series,value\n";

  if (kind == "disparity" || kind == "decompose") {
    Dataset ds;
    Tensor<double> feats;
    if (synthetic || ctx.cfg.data.interactions.empty()) {
      SyntheticSpec spec;
      spec.seed = ctx.cfg.train.seed;
      const SyntheticData data = make_sparse_bipartite(spec);
      ds = data.dataset;
      std::vector<FeatureMatrix> fm = data.features;
      feats = tensor_cast<double>(concat_features<float>(fm));
    } else {
      ds = load_split_dataset(ctx);
      const std::vector<FeatureMatrix> raw = load_raw_features(ctx, ds);
      feats = tensor_cast<double>(concat_features<float>(raw));
    }
    VbprModel<double> model(ds.num_users, ds.num_items, std::move(feats), ctx.cfg.model.d,
                            ctx.cfg.train.seed);
    TrainConfig tcfg = train_config(ctx.cfg);

    if (kind == "disparity") {
      const DisparitySeries s = gradient_disparity(model, ds, tcfg, epochs, true);
      for (int e = 0; e < epochs; ++e) {
        csv << (e + 1) << ",id_norm," << s.id_norms[e] << "\n";
        csv << (e + 1) << ",mm_norm," << s.mm_norms[e] << "\n";
        std::cout << "epoch " << (e + 1) << " |grad_ID| " << s.id_norms[e] << " |grad_MM| "
                  << s.mm_norms[e] << "\n";
      }
    } else {
      // per-epoch mean loss decomposition while training
      tcfg.max_epochs = epochs;
      tcfg.patience = epochs + 1;
      std::vector<double> total, id_loss, mm_loss;
      double bt = 0, bi = 0, bm = 0;
      size_t batches = 0;
      const FitResult r = fit(
          model, ds, tcfg,
          [&](const EpochRecord&) {
            total.push_back(bt / batches);
            id_loss.push_back(bi / batches);
            mm_loss.push_back(bm / batches);
            bt = bi = bm = 0;
            batches = 0;
          },
          [&](Tape<double>&, const BprBatch& batch) {
            const VbprLossDecomposition d = decompose_vbpr_loss(model, batch);
            bt += d.total;
            bi += d.id_loss;
            bm += d.mm_loss;
            ++batches;
          });
      for (size_t e = 0; e < total.size(); ++e) {
        csv << (e + 1) << ",total," << total[e] << "\n";
        csv << (e + 1) << ",id_loss," << id_loss[e] << "\n";
        csv << (e + 1) << ",mm_loss," << mm_loss[e] << "\n";
      }
      (void)r;
    }
  } else if (kind == "startup") {
    Dataset ds;
    std::unique_ptr<RunContext> sub;
    if (synthetic || ctx.cfg.data.interactions.empty()) {
      ds = synthetic_split_dataset(200, 120, 10, ctx.cfg.train.seed);
      // random features keep the pipeline runnable without real data
      Rng rng(ctx.cfg.train.seed + 7);
      FeatureMatrix mv, mt;
      mv.modality_id = "visual";
      mv.values = Tensor<float>::randn(120, 32, rng);
      mt.modality_id = "textual";
      mt.values = Tensor<float>::randn(120, 16, rng);
      const std::vector<const FeatureMatrix*> ptrs{&mv, &mt};
      auto adj = std::make_unique<BipartiteAdjacency<float>>(build_norm_adjacency<float>(ds));
      auto iig = std::make_unique<Csr<float>>(
          build_item_item_graph<float>({ptrs.data(), ptrs.size()}, ctx.cfg.graph.knn_k,
                                       std::vector<double>{0.5, 0.5})
              .matrix);
      std::vector<LirdrecModel<float>::ModalityInput> mods;
      for (const auto* f : ptrs) {
        LirdrecModel<float>::ModalityInput in;
        in.id = f->modality_id;
        in.raw = tensor_cast<float>(f->values);
        in.dct = tensor_cast<float>(dct2(tensor_cast<double>(f->values)));
        mods.push_back(std::move(in));
      }
      LirdrecModel<float> lird(ds.num_users, ds.num_items, std::move(mods),
                               lirdrec_config<float>(ctx.cfg.model), ctx.cfg.train.seed);
      lird.attach_graphs(adj.get(), iig.get());
      LightGcnModel<float> lgn(ds.num_users, ds.num_items, ctx.cfg.model.d,
                               ctx.cfg.model.lightgcn_layers, ctx.cfg.train.seed);
      lgn.attach_graphs(adj.get());
      const std::vector<std::pair<std::string, RankingModel<float>*>> models{
          {"lirdrec", &lird}, {"lightgcn", &lgn}};
      const auto curves = startup_curve(models, ds, epochs, train_config(ctx.cfg));
      for (const auto& c : curves)
        for (size_t e = 0; e < c.val_recall.size(); ++e)
          csv << (e + 1) << "," << c.model_name << "," << c.val_recall[e] << "\n";
    } else {
      ds = load_split_dataset(ctx);
      RunContext lird_ctx = ctx;
      lird_ctx.cfg.model.name = "lirdrec";
      BuiltModel<float> lird = build_model<float>(lird_ctx, ds, "");
      RunContext lgn_ctx = ctx;
      lgn_ctx.cfg.model.name = "lightgcn";
      BuiltModel<float> lgn = build_model<float>(lgn_ctx, ds, "");
      const std::vector<std::pair<std::string, RankingModel<float>*>> models{
          {"lirdrec", lird.model.get()}, {"lightgcn", lgn.model.get()}};
      const auto curves = startup_curve(models, ds, epochs, train_config(ctx.cfg));
      for (const auto& c : curves)
        for (size_t e = 0; e < c.val_recall.size(); ++e)
          csv << (e + 1) << "," << c.model_name << "," << c.val_recall[e] << "\n";
    }
  } else {
    throw ConfigError("diagnose: unknown kind '" + kind + "'");
  }
  ctx.write_run_json();
  return 0;
}

template <typename T>
int run_grid(RunContext& ctx, const std::string& caches_dir) {
  const Dataset ds = load_split_dataset(ctx);
  auto axis = [](std::vector<double> v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const bool is_lirdrec = ctx.cfg.model.name == "lirdrec";
  const auto lambdas = axis(ctx.cfg.grid.lambda, ctx.cfg.train.lambda);
  const auto lrs = axis(ctx.cfg.grid.lr, ctx.cfg.train.lr);
  // PWC and propagation-depth axes only apply to the full model
  const auto taus = is_lirdrec ? axis(ctx.cfg.grid.tau0, ctx.cfg.model.tau0)
                               : std::vector<double>{ctx.cfg.model.tau0};
  const auto gammas = is_lirdrec ? axis(ctx.cfg.grid.gamma, ctx.cfg.model.gamma)
                                 : std::vector<double>{ctx.cfg.model.gamma};
  const auto luis = (is_lirdrec && !ctx.cfg.grid.l_ui.empty())
                        ? ctx.cfg.grid.l_ui
                        : std::vector<int>{ctx.cfg.model.l_ui};

  std::ofstream csv(ctx.out_path("leaderboard.csv"));
  csv << "lambda,lr,tau0,gamma,l_ui,best_val_recall,best_epoch\n";
  double best_recall = -1.0;
  std::string best_desc;
  for (const double lambda : lambdas)
    for (const double lr : lrs)
      for (const double tau : taus)
        for (const double gamma : gammas)
          for (const int lui : luis) {
            RunContext point = ctx;
            point.cfg.train.lambda = lambda;
            point.cfg.train.lr = lr;
            point.cfg.model.tau0 = tau;
            point.cfg.model.gamma = gamma;
            point.cfg.model.l_ui = lui;
            BuiltModel<T> built = build_model<T>(point, ds, caches_dir);
            const FitResult r = fit(*built.model, ds, train_config(point.cfg));
            csv << lambda << "," << lr << "," << tau << "," << gamma << "," << lui << ","
                << r.best_recall << "," << r.best_epoch << "\n";
            csv.flush();
            std::cout << "grid point lambda=" << lambda << " lr=" << lr << " tau0=" << tau
                      << " gamma=" << gamma << " l_ui=" << lui << " -> R@"
                      << train_config(point.cfg).primary_k << " " << r.best_recall << "\n";
            if (r.best_recall > best_recall) {
              best_recall = r.best_recall;
              std::ostringstream s;
              s << "lambda=" << lambda << " lr=" << lr << " tau0=" << tau << " gamma=" << gamma
                << " l_ui=" << lui;
              best_desc = s.str();
            }
          }
  std::cout << "best: " << best_desc << " with validation recall " << best_recall << "\n";
  ctx.write_run_json();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LIRDRec multimodal recommendation engine"};
  app.require_subcommand(1);

  struct {
    std::string config, out = "out", caches, checkpoint, split = "test";
    std::string kind = "disparity";
    std::string ks;
    int64_t seed = -1;
    int threads = -1;
    int epochs = 5;
    bool synthetic = false;
  } opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config file (empty = defaults)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "override train.seed");
    sub->add_option("--threads", opt.threads, "cap worker threads");
  };

  CLI::App* preprocess = app.add_subcommand("preprocess", "DCT-transform feature matrices");
  add_common(preprocess);
  CLI::App* build_graph = app.add_subcommand("build-graph", "build adjacency and item graph caches");
  add_common(build_graph);
  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train);
  train->add_option("--caches", opt.caches, "directory with preprocess/build-graph outputs");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", opt.checkpoint, "checkpoint file from train");
  eval->add_option("--caches", opt.caches, "directory with preprocess/build-graph outputs");
  eval->add_option("--split", opt.split, "valid or test")
      ->check(CLI::IsMember({"valid", "test"}));
  eval->add_option("--k", opt.ks, "comma-separated cutoffs, e.g. 10,20");
  CLI::App* coldstart = app.add_subcommand("coldstart", "cold-start split + train + eval pipeline");
  add_common(coldstart);
  CLI::App* diagnose = app.add_subcommand("diagnose", "gradient-bias and startup diagnostics");
  add_common(diagnose);
  diagnose->add_option("--kind", opt.kind, "disparity | decompose | startup")
      ->check(CLI::IsMember({"disparity", "decompose", "startup"}));
  diagnose->add_option("--epochs", opt.epochs, "diagnostic epochs");
  diagnose->add_flag("--synthetic", opt.synthetic, "use the built-in synthetic generator");
  CLI::App* grid = app.add_subcommand("grid", "hyperparameter grid search");
  add_common(grid);
  grid->add_option("--caches", opt.caches, "directory with preprocess/build-graph outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const std::string sub = app.get_subcommands().front()->get_name();
    RunContext ctx = make_context(sub, opt.config, opt.out, opt.seed, opt.threads);
    std::vector<int> ks_override;
    if (!opt.ks.empty()) {
      std::stringstream ss(opt.ks);
      std::string tok;
      while (std::getline(ss, tok, ',')) ks_override.push_back(std::stoi(tok));
      ctx.cfg.eval.ks = ks_override;
    }
    const bool f64 = ctx.cfg.train.precision == "f64";
    const std::string caches = opt.caches.empty() ? opt.out : opt.caches;

    if (sub == "preprocess") return cmd_preprocess(ctx);
    if (sub == "build-graph") return cmd_build_graph(ctx);
    if (sub == "train") return f64 ? run_train<double>(ctx, caches) : run_train<float>(ctx, caches);
    if (sub == "eval")
      return f64 ? run_eval<double>(ctx, opt.checkpoint, caches, opt.split, ks_override)
                 : run_eval<float>(ctx, opt.checkpoint, caches, opt.split, ks_override);
    if (sub == "coldstart")
      return f64 ? run_coldstart<double>(ctx) : run_coldstart<float>(ctx);
    if (sub == "diagnose") return cmd_diagnose(ctx, opt.kind, opt.epochs, opt.synthetic);
    if (sub == "grid") return f64 ? run_grid<double>(ctx, caches) : run_grid<float>(ctx, caches);
    throw ConfigError("unknown subcommand " + sub);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
