#include "lirdrec/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lirdrec/errors.hpp"

namespace lirdrec {

void write_checkpoint_sidecar(const CheckpointMeta& meta, const std::string& path) {
  nlohmann::json j{{"model", meta.model_name},
                   {"dataset_hash", meta.dataset_hash},
                   {"adam_step", meta.adam_step},
                   {"has_pwc", meta.has_pwc},
                   {"pwc_tau", meta.pwc_tau},
                   {"pwc_gamma", meta.pwc_gamma},
                   {"pwc_n", meta.pwc_n}};
  j["config"] = nlohmann::json::parse(meta.config_json.empty() ? "{}" : meta.config_json);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw FormatError("write failed: " + path);
}

CheckpointMeta read_checkpoint_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint sidecar: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint sidecar " + path + ": " + e.what());
  }
  CheckpointMeta meta;
  meta.model_name = j.value("model", "");
  meta.dataset_hash = j.value("dataset_hash", 0ull);
  meta.adam_step = j.value("adam_step", 0ull);
  meta.has_pwc = j.value("has_pwc", false);
  meta.pwc_tau = j.value("pwc_tau", 0.0);
  meta.pwc_gamma = j.value("pwc_gamma", 0.0);
  meta.pwc_n = j.value("pwc_n", 0ull);
  if (j.contains("config")) meta.config_json = j["config"].dump(2);
  return meta;
}

}  // namespace lirdrec
