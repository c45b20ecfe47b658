#include "lirdrec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lirdrec/errors.hpp"

namespace lirdrec {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void expect_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
}

template <typename T>
T get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<T>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

void parse_data(const json& j, DataConfig& out) {
  expect_keys(j, "data",
              {"interactions", "features", "split_mode", "ratios", "holdout", "split_seed",
               "dedup"});
  if (j.contains("interactions")) out.interactions = get_string(j["interactions"], "data.interactions");
  if (j.contains("features")) {
    const auto& f = j["features"];
    if (!f.is_array()) fail("data.features", "expected an array");
    out.features.clear();
    for (size_t i = 0; i < f.size(); ++i) {
      const std::string p = "data.features[" + std::to_string(i) + "]";
      expect_keys(f[i], p, {"modality", "path"});
      if (!f[i].contains("modality") || !f[i].contains("path"))
        fail(p, "needs 'modality' and 'path'");
      out.features.push_back(
          {get_string(f[i]["modality"], p + ".modality"), get_string(f[i]["path"], p + ".path")});
    }
  }
  if (j.contains("split_mode")) {
    out.split_mode = get_string(j["split_mode"], "data.split_mode");
    if (out.split_mode != "random" && out.split_mode != "coldstart" && out.split_mode != "presplit")
      fail("data.split_mode", "must be one of random|coldstart|presplit");
  }
  if (j.contains("ratios")) {
    const auto& r = j["ratios"];
    if (!r.is_array() || r.size() != 3) fail("data.ratios", "expected an array of 3 numbers");
    for (size_t i = 0; i < 3; ++i)
      out.ratios[i] = get_number<double>(r[i], "data.ratios[" + std::to_string(i) + "]");
    if (std::abs(out.ratios[0] + out.ratios[1] + out.ratios[2] - 1.0) > 1e-9)
      fail("data.ratios", "must sum to 1");
  }
  if (j.contains("holdout")) {
    out.holdout = get_number<double>(j["holdout"], "data.holdout");
    if (out.holdout <= 0.0 || out.holdout >= 1.0) fail("data.holdout", "must be in (0,1)");
  }
  if (j.contains("split_seed")) out.split_seed = get_number<uint64_t>(j["split_seed"], "data.split_seed");
  if (j.contains("dedup")) out.dedup = get_bool(j["dedup"], "data.dedup");
}

void parse_graph(const json& j, GraphConfig& out) {
  expect_keys(j, "graph", {"knn_k", "fusion_weights"});
  if (j.contains("knn_k")) {
    out.knn_k = get_int(j["knn_k"], "graph.knn_k");
    if (out.knn_k < 1) fail("graph.knn_k", "must be >= 1");
  }
  if (j.contains("fusion_weights")) {
    const auto& w = j["fusion_weights"];
    if (!w.is_array()) fail("graph.fusion_weights", "expected an array");
    out.fusion_weights.clear();
    for (size_t i = 0; i < w.size(); ++i)
      out.fusion_weights.push_back(
          get_number<double>(w[i], "graph.fusion_weights[" + std::to_string(i) + "]"));
  }
}

void parse_model(const json& j, ModelConfig& out) {
  expect_keys(j, "model",
              {"name", "d", "d1", "d_h", "l_ui", "l_ii", "leaky_slope", "pwc_enabled",
               "pwc_softmax", "pwc_theta_scope", "pwc_update", "gamma", "tau0",
               "lightgcn_layers"});
  if (j.contains("name")) {
    out.name = get_string(j["name"], "model.name");
    if (out.name != "lirdrec" && out.name != "mf" && out.name != "lightgcn" && out.name != "vbpr")
      fail("model.name", "must be one of lirdrec|mf|lightgcn|vbpr");
  }
  if (j.contains("d")) out.d = get_int(j["d"], "model.d");
  if (j.contains("d1")) out.d1 = get_int(j["d1"], "model.d1");
  if (j.contains("d_h")) out.d_h = get_int(j["d_h"], "model.d_h");
  if (j.contains("l_ui")) out.l_ui = get_int(j["l_ui"], "model.l_ui");
  if (j.contains("l_ii")) out.l_ii = get_int(j["l_ii"], "model.l_ii");
  if (j.contains("leaky_slope")) out.leaky_slope = get_number<double>(j["leaky_slope"], "model.leaky_slope");
  if (j.contains("pwc_enabled")) out.pwc_enabled = get_bool(j["pwc_enabled"], "model.pwc_enabled");
  if (j.contains("pwc_softmax")) out.pwc_softmax = get_bool(j["pwc_softmax"], "model.pwc_softmax");
  if (j.contains("pwc_theta_scope")) {
    out.pwc_theta_scope = get_string(j["pwc_theta_scope"], "model.pwc_theta_scope");
    if (out.pwc_theta_scope != "global" && out.pwc_theta_scope != "per_user")
      fail("model.pwc_theta_scope", "must be global or per_user");
  }
  if (j.contains("pwc_update")) {
    out.pwc_update = get_string(j["pwc_update"], "model.pwc_update");
    if (out.pwc_update != "batch" && out.pwc_update != "epoch")
      fail("model.pwc_update", "must be batch or epoch");
  }
  if (j.contains("gamma")) {
    out.gamma = get_number<double>(j["gamma"], "model.gamma");
    if (out.gamma <= 0.0 || out.gamma >= 1.0) fail("model.gamma", "must be in (0,1)");
  }
  if (j.contains("tau0")) {
    out.tau0 = get_number<double>(j["tau0"], "model.tau0");
    if (out.tau0 <= 0.0 || out.tau0 >= 1.0) fail("model.tau0", "must be in (0,1)");
  }
  if (j.contains("lightgcn_layers")) out.lightgcn_layers = get_int(j["lightgcn_layers"], "model.lightgcn_layers");
  if (out.d < 1) fail("model.d", "must be >= 1");
  if (out.d1 < 1) fail("model.d1", "must be >= 1");
  if (out.d_h < 1) fail("model.d_h", "must be >= 1");
  if (out.l_ui < 0) fail("model.l_ui", "must be >= 0");
  if (out.l_ii < 0) fail("model.l_ii", "must be >= 0");
}

void parse_train(const json& j, TrainSection& out) {
  expect_keys(j, "train",
              {"lr", "batch_size", "max_epochs", "patience", "lambda", "reg_negative", "seed",
               "precision"});
  if (j.contains("lr")) out.lr = get_number<double>(j["lr"], "train.lr");
  if (j.contains("batch_size")) out.batch_size = get_int(j["batch_size"], "train.batch_size");
  if (j.contains("max_epochs")) out.max_epochs = get_int(j["max_epochs"], "train.max_epochs");
  if (j.contains("patience")) out.patience = get_int(j["patience"], "train.patience");
  if (j.contains("lambda")) out.lambda = get_number<double>(j["lambda"], "train.lambda");
  if (j.contains("reg_negative")) out.reg_negative = get_bool(j["reg_negative"], "train.reg_negative");
  if (j.contains("seed")) out.seed = get_number<uint64_t>(j["seed"], "train.seed");
  if (j.contains("precision")) {
    out.precision = get_string(j["precision"], "train.precision");
    if (out.precision != "f32" && out.precision != "f64")
      fail("train.precision", "must be f32 or f64");
  }
  if (out.batch_size < 1) fail("train.batch_size", "must be >= 1");
  if (out.max_epochs < 1) fail("train.max_epochs", "must be >= 1");
  if (out.patience < 1) fail("train.patience", "must be >= 1");
  if (out.lr <= 0.0) fail("train.lr", "must be > 0");
  if (out.lambda < 0.0) fail("train.lambda", "must be >= 0");
}

void parse_eval(const json& j, EvalSection& out) {
  expect_keys(j, "eval", {"ks"});
  if (j.contains("ks")) {
    const auto& k = j["ks"];
    if (!k.is_array() || k.empty()) fail("eval.ks", "expected a non-empty array");
    out.ks.clear();
    for (size_t i = 0; i < k.size(); ++i) {
      const int v = get_int(k[i], "eval.ks[" + std::to_string(i) + "]");
      if (v < 1) fail("eval.ks[" + std::to_string(i) + "]", "must be >= 1");
      out.ks.push_back(v);
    }
  }
}

void parse_grid(const json& j, GridSection& out) {
  expect_keys(j, "grid", {"lambda", "lr", "tau0", "gamma", "l_ui"});
  auto read_doubles = [](const json& a, const std::string& path) {
    if (!a.is_array()) fail(path, "expected an array");
    std::vector<double> v;
    for (size_t i = 0; i < a.size(); ++i)
      v.push_back(get_number<double>(a[i], path + "[" + std::to_string(i) + "]"));
    return v;
  };
  if (j.contains("lambda")) out.lambda = read_doubles(j["lambda"], "grid.lambda");
  if (j.contains("lr")) out.lr = read_doubles(j["lr"], "grid.lr");
  if (j.contains("tau0")) out.tau0 = read_doubles(j["tau0"], "grid.tau0");
  if (j.contains("gamma")) out.gamma = read_doubles(j["gamma"], "grid.gamma");
  if (j.contains("l_ui")) {
    if (!j["l_ui"].is_array()) fail("grid.l_ui", "expected an array");
    out.l_ui.clear();
    for (size_t i = 0; i < j["l_ui"].size(); ++i)
      out.l_ui.push_back(get_int(j["l_ui"][i], "grid.l_ui[" + std::to_string(i) + "]"));
  }
}

}  // namespace

AppConfig parse_config_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + origin + ": " + e.what());
  }
  AppConfig cfg;
  expect_keys(j, "", {"data", "graph", "model", "train", "eval", "grid", "threads"});
  if (j.contains("data")) parse_data(j["data"], cfg.data);
  if (j.contains("graph")) parse_graph(j["graph"], cfg.graph);
  if (j.contains("model")) parse_model(j["model"], cfg.model);
  if (j.contains("train")) parse_train(j["train"], cfg.train);
  if (j.contains("eval")) parse_eval(j["eval"], cfg.eval);
  if (j.contains("grid")) parse_grid(j["grid"], cfg.grid);
  if (j.contains("threads")) cfg.threads = get_int(j["threads"], "threads");
  return cfg;
}

AppConfig parse_config_file(const std::string& path) {
  if (path.empty()) return AppConfig{};
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string config_to_json(const AppConfig& cfg) {
  json features = json::array();
  for (const auto& f : cfg.data.features)
    features.push_back({{"modality", f.modality}, {"path", f.path}});
  json j{
      {"data",
       {{"interactions", cfg.data.interactions},
        {"features", features},
        {"split_mode", cfg.data.split_mode},
        {"ratios", cfg.data.ratios},
        {"holdout", cfg.data.holdout},
        {"split_seed", cfg.data.split_seed},
        {"dedup", cfg.data.dedup}}},
      {"graph", {{"knn_k", cfg.graph.knn_k}, {"fusion_weights", cfg.graph.fusion_weights}}},
      {"model",
       {{"name", cfg.model.name},
        {"d", cfg.model.d},
        {"d1", cfg.model.d1},
        {"d_h", cfg.model.d_h},
        {"l_ui", cfg.model.l_ui},
        {"l_ii", cfg.model.l_ii},
        {"leaky_slope", cfg.model.leaky_slope},
        {"pwc_enabled", cfg.model.pwc_enabled},
        {"pwc_softmax", cfg.model.pwc_softmax},
        {"pwc_theta_scope", cfg.model.pwc_theta_scope},
        {"pwc_update", cfg.model.pwc_update},
        {"gamma", cfg.model.gamma},
        {"tau0", cfg.model.tau0},
        {"lightgcn_layers", cfg.model.lightgcn_layers}}},
      {"train",
       {{"lr", cfg.train.lr},
        {"batch_size", cfg.train.batch_size},
        {"max_epochs", cfg.train.max_epochs},
        {"patience", cfg.train.patience},
        {"lambda", cfg.train.lambda},
        {"reg_negative", cfg.train.reg_negative},
        {"seed", cfg.train.seed},
        {"precision", cfg.train.precision}}},
      {"eval", {{"ks", cfg.eval.ks}}},
      {"grid",
       {{"lambda", cfg.grid.lambda},
        {"lr", cfg.grid.lr},
        {"tau0", cfg.grid.tau0},
        {"gamma", cfg.grid.gamma},
        {"l_ui", cfg.grid.l_ui}}},
      {"threads", cfg.threads}};
  return j.dump(2);
}

void apply_fusion_defaults(AppConfig& cfg) {
  const size_t m = cfg.data.features.size();
  if (m == 0) return;
  auto& w = cfg.graph.fusion_weights;
  if (w.empty()) {
    w.assign(m, 1.0 / static_cast<double>(m));
    if (m == 2) {
      // FREEDOM-style defaults when the usual two modalities are present
      const std::string a = cfg.data.features[0].modality;
      const std::string b = cfg.data.features[1].modality;
      if (a == "visual" && b == "textual") w = {0.1, 0.9};
      if (a == "textual" && b == "visual") w = {0.9, 0.1};
    }
  }
  if (w.size() != m)
    throw ConfigError("config: graph.fusion_weights: expected " + std::to_string(m) +
                      " weights, got " + std::to_string(w.size()));
  double s = 0.0;
  for (const double x : w) s += x;
  if (std::abs(s - 1.0) > 1e-9)
    throw ConfigError("config: graph.fusion_weights: must sum to 1");
}

}  // namespace lirdrec
