#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lirdrec {

struct FeatureSpec {
  std::string modality;
  std::string path;
};

struct DataConfig {
  std::string interactions;
  std::vector<FeatureSpec> features;
  std::string split_mode = "random";  // random | coldstart | presplit
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  double holdout = 0.2;
  uint64_t split_seed = 42;
  bool dedup = false;
};

struct GraphConfig {
  int knn_k = 10;
  // one weight per configured feature; empty selects the defaults
  // (visual 0.1 / textual 0.9 when those are the modalities, else uniform)
  std::vector<double> fusion_weights;
};

struct ModelConfig {
  std::string name = "lirdrec";  // lirdrec | mf | lightgcn | vbpr
  int d = 64;
  int d1 = 256;
  int d_h = 32;
  int l_ui = 2;
  int l_ii = 1;
  double leaky_slope = 0.01;
  bool pwc_enabled = true;
  bool pwc_softmax = true;
  std::string pwc_theta_scope = "global";  // global | per_user
  std::string pwc_update = "batch";        // batch | epoch (decay-counter granularity)
  double gamma = 0.9;
  double tau0 = 0.9;
  int lightgcn_layers = 2;
};

struct TrainSection {
  double lr = 1e-3;
  int batch_size = 2048;
  int max_epochs = 1000;
  int patience = 20;
  double lambda = 1e-4;
  bool reg_negative = false;
  uint64_t seed = 42;
  std::string precision = "f32";  // f32 | f64
};

struct EvalSection {
  std::vector<int> ks{10, 20};
};

struct GridSection {
  // default axes follow the published sweep ranges; an explicit config entry
  // replaces the whole axis
  std::vector<double> lambda{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> lr;
  std::vector<double> tau0{0.7, 0.8, 0.9, 0.95, 0.99};
  std::vector<double> gamma;
  std::vector<int> l_ui;
};

// Full defaults echo: an empty config file is valid and fully reproducible.
struct AppConfig {
  DataConfig data;
  GraphConfig graph;
  ModelConfig model;
  TrainSection train;
  EvalSection eval;
  GridSection grid;
  int threads = 0;
};

// Strict parsing: unknown fields, wrong types and out-of-range values raise
// ConfigError with the offending field path. Empty path yields defaults.
AppConfig parse_config_file(const std::string& path);
AppConfig parse_config_text(const std::string& json_text, const std::string& origin);

std::string config_to_json(const AppConfig& cfg);  // resolved echo, pretty-printed

// Fills graph.fusion_weights when empty; validates the weight count.
void apply_fusion_defaults(AppConfig& cfg);

}  // namespace lirdrec
