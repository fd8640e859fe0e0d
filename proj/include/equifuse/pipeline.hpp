#pragma once

#include "equifuse/adapter.hpp"
#include "equifuse/lm.hpp"
#include "equifuse/losses.hpp"
#include "equifuse/residues.hpp"

namespace equifuse {

enum class TaskKind { dynamics, design };

// Architecture variants of the ablation matrix:
//   full                        encoder -> projector -> sequence model ->
//                               residual re-projection -> equivariant decode
//   encoder_only                encoder -> equivariant decode (no sequence
//                               model, no prompt)
//   llm_then_encoder            raw features through the sequence model
//                               (with prompt) before the encoder; the
//                               encoder's final layer emits the F frames
//   llm_no_prompt_then_encoder  same, without any prompt
enum class Variant {
  full,
  encoder_only,
  llm_then_encoder,
  llm_no_prompt_then_encoder
};

enum class StatsScope { last_frame, window };

struct ModelConfig {
  TaskKind task = TaskKind::dynamics;
  int t_in = 10;
  int f_out = 10;
  Eigen::Index feature_width = 1;  // width of the dataset's node features
  Eigen::Index hidden = 64;        // feature/message/MLP width everywhere
  int encoder_layers = 4;
  LmConfig lm;
  SequenceOrder layout = SequenceOrder::features_first;
  bool use_prompt = true;
  bool use_object = true;
  bool use_statistics = true;
  Variant variant = Variant::full;
  StatsScope stats_scope = StatsScope::last_frame;
  int prompt_decimals = 3;
  std::uint64_t seed = 0;
};

struct DynamicsOutput {
  std::vector<Tensor> frames;  // F coordinate sets, each [N x 3]
  Tensor feats;
};

struct DesignOutput {
  Tensor logits;         // [n_residues x 20]
  Tensor probabilities;  // softmax rows
  Tensor backbone;       // [4*n_residues x 3]
  Tensor feats;
};

class Model {
 public:
  static Model create(const ModelConfig& cfg, const PromptSpec& prompt);
  static Model create(const ModelConfig& cfg);  // task-default prompt

  const ModelConfig& config() const { return cfg_; }
  const LmParams& lm() const { return lm_; }
  const EncoderParams& encoder() const { return encoder_; }
  const AdapterParams& adapter() const { return adapter_; }

  // Trainable groups first, the frozen sequence-model group last.
  std::vector<ParamGroup> param_groups() const;

  // Prompt text for one input graph (placeholder-substituted, flag-gated).
  std::string prompt_text(const GeometricGraph& stats_graph) const;

  DynamicsOutput forward_dynamics(const GeometricGraph& skeleton,
                                  const std::vector<MatX3>& window) const;
  DesignOutput forward_design(const ResidueGraph& rg) const;

  // Plain-data prediction paths.
  std::vector<MatX3> predict_frames(const GeometricGraph& skeleton,
                                    const std::vector<MatX3>& window) const;
  ResidueStructure predict_design(const ResidueStructure& input,
                                  Mat* probabilities = nullptr) const;

 private:
  Model() = default;
  PromptBundle build_prompt(const GeometricGraph& stats_graph,
                            const std::vector<MatX3>* window) const;

  ModelConfig cfg_;
  PromptSpec prompt_;
  EncoderParams encoder_;
  LmParams lm_;
  AdapterParams adapter_;
  Tensor bridge_in_w_, bridge_in_b_;    // llm_then_* : raw features -> d_llm
  Tensor bridge_out_w_, bridge_out_b_;  // llm_then_* : d_llm -> hidden
  Tensor head_w_, head_b_;              // design readout: hidden -> 20
};

}  // namespace equifuse
