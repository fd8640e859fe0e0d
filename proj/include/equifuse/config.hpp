#pragma once

#include <string>

#include <json.hpp>

#include "equifuse/pipeline.hpp"

namespace equifuse {

// Flat run configuration. Files are single JSON objects with exactly these
// keys; unknown keys are rejected so ablation scripts fail loudly on typos.
struct RunConfig {
  std::string task = "dynamics";  // dynamics | design
  int T = 10;
  int F = 10;
  int hidden = 64;
  int encoder_layers = 4;
  int d_llm = 64;
  int lm_blocks = 2;
  int n_heads = 4;
  int max_seq_len = 512;
  int ffn_width = 0;  // 0 selects 4 * d_llm
  std::string layout = "features_first";  // features_first | prompt_first
  bool use_prompt = true;
  bool use_object = true;
  bool use_statistics = true;
  std::string variant = "full";
  double lambda = 1.0;
  double delta = 1.0;
  double lr = 5e-3;
  double grad_clip = 5.0;  // global gradient-norm cap; <= 0 disables
  int epochs = 30;
  int batch_size = 8;
  int windows_per_traj = 4;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string out_dir = "out";
  std::string prompt_template;  // optional path
  std::string stats_scope = "last_frame";  // last_frame | window
  int prompt_decimals = 3;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  void validate() const;
  TaskKind task_kind() const;
  Variant variant_kind() const;
  SequenceOrder layout_order() const;
  StatsScope stats_scope_kind() const;
  // feature_width comes from the dataset at model-build time.
  ModelConfig model_config(Eigen::Index feature_width) const;
  PromptSpec prompt_spec() const;
};

}  // namespace equifuse
