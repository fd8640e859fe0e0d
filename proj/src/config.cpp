#include "equifuse/config.hpp"

#include <fstream>

namespace equifuse {

using nlohmann::json;

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }
  return from_json(doc);
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "task") cfg.task = value.get<std::string>();
      else if (key == "T") cfg.T = value.get<int>();
      else if (key == "F") cfg.F = value.get<int>();
      else if (key == "hidden") cfg.hidden = value.get<int>();
      else if (key == "encoder_layers") cfg.encoder_layers = value.get<int>();
      else if (key == "d_llm") cfg.d_llm = value.get<int>();
      else if (key == "lm_blocks") cfg.lm_blocks = value.get<int>();
      else if (key == "n_heads") cfg.n_heads = value.get<int>();
      else if (key == "max_seq_len") cfg.max_seq_len = value.get<int>();
      else if (key == "ffn_width") cfg.ffn_width = value.get<int>();
      else if (key == "layout") cfg.layout = value.get<std::string>();
      else if (key == "use_prompt") cfg.use_prompt = value.get<bool>();
      else if (key == "use_object") cfg.use_object = value.get<bool>();
      else if (key == "use_statistics") cfg.use_statistics = value.get<bool>();
      else if (key == "variant") cfg.variant = value.get<std::string>();
      else if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "delta") cfg.delta = value.get<double>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "grad_clip") cfg.grad_clip = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "windows_per_traj") cfg.windows_per_traj = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "dataset") cfg.dataset = value.get<std::string>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else if (key == "prompt_template") cfg.prompt_template = value.get<std::string>();
      else if (key == "stats_scope") cfg.stats_scope = value.get<std::string>();
      else if (key == "prompt_decimals") cfg.prompt_decimals = value.get<int>();
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

json RunConfig::to_json() const {
  json doc;
  doc["task"] = task;
  doc["T"] = T;
  doc["F"] = F;
  doc["hidden"] = hidden;
  doc["encoder_layers"] = encoder_layers;
  doc["d_llm"] = d_llm;
  doc["lm_blocks"] = lm_blocks;
  doc["n_heads"] = n_heads;
  doc["max_seq_len"] = max_seq_len;
  doc["ffn_width"] = ffn_width;
  doc["layout"] = layout;
  doc["use_prompt"] = use_prompt;
  doc["use_object"] = use_object;
  doc["use_statistics"] = use_statistics;
  doc["variant"] = variant;
  doc["lambda"] = lambda;
  doc["delta"] = delta;
  doc["lr"] = lr;
  doc["grad_clip"] = grad_clip;
  doc["epochs"] = epochs;
  doc["batch_size"] = batch_size;
  doc["windows_per_traj"] = windows_per_traj;
  doc["seed"] = seed;
  doc["dataset"] = dataset;
  doc["out_dir"] = out_dir;
  doc["prompt_template"] = prompt_template;
  doc["stats_scope"] = stats_scope;
  doc["prompt_decimals"] = prompt_decimals;
  return doc;
}

void RunConfig::validate() const {
  if (task != "dynamics" && task != "design")
    throw ConfigError("config: task must be 'dynamics' or 'design', got '" +
                      task + "'");
  if (task == "dynamics" && (T < 2 || F < 1))
    throw ConfigError("config: dynamics requires T >= 2 and F >= 1");
  if (task == "design" && F != 1)
    throw ConfigError("config: design requires F = 1");
  if (layout != "features_first" && layout != "prompt_first")
    throw ConfigError("config: unknown layout '" + layout + "'");
  if (stats_scope != "last_frame" && stats_scope != "window")
    throw ConfigError("config: unknown stats_scope '" + stats_scope + "'");
  variant_kind();
  if (epochs < 0 || batch_size < 1 || windows_per_traj < 1)
    throw ConfigError("config: bad training sizes");
  if (hidden < 1 || encoder_layers < 1 || d_llm < 1 || lm_blocks < 0 ||
      n_heads < 1 || max_seq_len < 1)
    throw ConfigError("config: bad model sizes");
  if (d_llm % n_heads != 0)
    throw ConfigError("config: d_llm must be divisible by n_heads");
  if (delta <= 0.0) throw ConfigError("config: delta must be positive");
}

TaskKind RunConfig::task_kind() const {
  return task == "dynamics" ? TaskKind::dynamics : TaskKind::design;
}

Variant RunConfig::variant_kind() const {
  if (variant == "full") return Variant::full;
  if (variant == "encoder_only") return Variant::encoder_only;
  if (variant == "llm_then_encoder") return Variant::llm_then_encoder;
  if (variant == "llm_no_prompt_then_encoder")
    return Variant::llm_no_prompt_then_encoder;
  throw ConfigError("config: unknown variant '" + variant + "'");
}

SequenceOrder RunConfig::layout_order() const {
  return layout == "features_first" ? SequenceOrder::features_first
                                    : SequenceOrder::prompt_first;
}

StatsScope RunConfig::stats_scope_kind() const {
  return stats_scope == "last_frame" ? StatsScope::last_frame
                                     : StatsScope::window;
}

ModelConfig RunConfig::model_config(Eigen::Index feature_width) const {
  ModelConfig mc;
  mc.task = task_kind();
  mc.t_in = T;
  mc.f_out = F;
  mc.feature_width = feature_width;
  mc.hidden = hidden;
  mc.encoder_layers = encoder_layers;
  mc.lm.d_model = d_llm;
  mc.lm.n_blocks = lm_blocks;
  mc.lm.n_heads = n_heads;
  mc.lm.max_seq_len = max_seq_len;
  mc.lm.ffn_width = ffn_width > 0 ? ffn_width : 4 * d_llm;
  mc.layout = layout_order();
  mc.use_prompt = use_prompt;
  mc.use_object = use_object;
  mc.use_statistics = use_statistics;
  mc.variant = variant_kind();
  mc.stats_scope = stats_scope_kind();
  mc.prompt_decimals = prompt_decimals;
  mc.seed = seed;
  return mc;
}

PromptSpec RunConfig::prompt_spec() const {
  if (!prompt_template.empty()) return load_prompt_template(prompt_template);
  return task_kind() == TaskKind::dynamics ? default_dynamics_prompt()
                                           : default_design_prompt();
}

}  // namespace equifuse
