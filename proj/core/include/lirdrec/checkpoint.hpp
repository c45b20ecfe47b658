#pragma once

#include <string>
#include <unordered_map>

#include "lirdrec/container.hpp"
#include "lirdrec/model.hpp"
#include "lirdrec/ranking_model.hpp"

namespace lirdrec {

// Sidecar metadata stored as JSON next to the binary sections.
struct CheckpointMeta {
  std::string model_name;
  std::string config_json;  // resolved AppConfig echo
  uint64_t dataset_hash = 0;
  uint64_t adam_step = 0;
  bool has_pwc = false;
  double pwc_tau = 0.0;
  double pwc_gamma = 0.0;
  uint64_t pwc_n = 0;
};

void write_checkpoint_sidecar(const CheckpointMeta& meta, const std::string& path);
CheckpointMeta read_checkpoint_sidecar(const std::string& path);

// Parameter values (and Adam moments when present) as f32 sections; PWC
// theta rides along as a section, its scalars in the sidecar.
template <typename T>
void save_checkpoint(RankingModel<T>& model, CheckpointMeta meta, const std::string& path) {
  std::vector<NamedTensor> sections;
  for (auto* p : model.parameters()) {
    sections.push_back({p->name, tensor_cast<float>(p->value)});
    if (!p->adam_m.empty()) {
      sections.push_back({p->name + "#m", tensor_cast<float>(p->adam_m)});
      sections.push_back({p->name + "#v", tensor_cast<float>(p->adam_v)});
    }
  }
  if (auto* lird = dynamic_cast<LirdrecModel<T>*>(&model);
      lird != nullptr && lird->config().pwc.enabled) {
    const auto& st = lird->pwc_state();
    sections.push_back({"pwc.theta", tensor_cast<float>(st.theta)});
    meta.has_pwc = true;
    meta.pwc_tau = st.tau;
    meta.pwc_gamma = st.gamma;
    meta.pwc_n = st.n;
  }
  store_sections(sections, path);
  write_checkpoint_sidecar(meta, path + ".json");
}

// The model must already be constructed with matching shapes (the CLI
// rebuilds it from the sidecar's config echo).
template <typename T>
CheckpointMeta load_checkpoint(RankingModel<T>& model, const std::string& path) {
  const auto sections = load_sections(path);
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& s : sections) by_name.emplace(s.name, &s);
  const CheckpointMeta meta = read_checkpoint_sidecar(path + ".json");

  auto assign = [&](const std::string& name, Tensor<T>& dst, bool required) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (required) throw FormatError("checkpoint " + path + ": missing section '" + name + "'");
      return;
    }
    const auto& src = it->second->data;
    if (src.rows() != dst.rows() || src.cols() != dst.cols())
      throw ContractError("checkpoint " + path + ": section '" + name + "' has shape " +
                          std::to_string(src.rows()) + "x" + std::to_string(src.cols()) +
                          ", model expects " + std::to_string(dst.rows()) + "x" +
                          std::to_string(dst.cols()));
    dst = tensor_cast<T>(src);
  };

  for (auto* p : model.parameters()) {
    assign(p->name, p->value, true);
    if (by_name.count(p->name + "#m")) {
      p->adam_m = Tensor<T>(p->value.rows(), p->value.cols());
      p->adam_v = Tensor<T>(p->value.rows(), p->value.cols());
      assign(p->name + "#m", p->adam_m, true);
      assign(p->name + "#v", p->adam_v, true);
    }
  }
  if (auto* lird = dynamic_cast<LirdrecModel<T>*>(&model);
      lird != nullptr && lird->config().pwc.enabled) {
    if (!meta.has_pwc)
      throw FormatError("checkpoint " + path + ": model expects PWC state, sidecar has none");
    auto& st = lird->pwc_state();
    assign("pwc.theta", st.theta, true);
    st.tau = meta.pwc_tau;
    st.gamma = meta.pwc_gamma;
    st.n = meta.pwc_n;
  }
  return meta;
}

}  // namespace lirdrec
