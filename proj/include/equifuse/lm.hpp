#pragma once

#include "equifuse/optim.hpp"
#include "equifuse/prompt.hpp"

namespace equifuse {

struct LmConfig {
  Eigen::Index d_model = 64;
  int n_blocks = 2;
  int n_heads = 4;
  Eigen::Index max_seq_len = 512;
  Eigen::Index ffn_width = 256;
  Eigen::Index vocab = kVocabSize;
};

// One pre-normalization transformer block: bidirectional multi-head
// self-attention and a SiLU feed-forward, both residual.
struct LmBlockParams {
  Tensor wq, wk, wv, wo;          // [d x d]
  Tensor w1, b1, w2, b2;          // feed-forward
  Tensor ln1_gain, ln1_bias;      // pre-attention norm
  Tensor ln2_gain, ln2_bias;      // pre-ffn norm
};

// Frozen sequence model. Parameters are seeded random stand-ins at a desk
// scale; the checkpoint format accepts externally produced weights of the
// same layout. Gradients flow through these tensors to upstream inputs but
// the optimizer never updates them (the group is registered frozen).
struct LmParams {
  LmConfig cfg;
  Tensor token_embedding;       // [vocab x d]
  Tensor positional_embedding;  // [max_seq_len x d]
  std::vector<LmBlockParams> blocks;

  static LmParams create(const LmConfig& cfg, Rng& rng);
  ParamGroup param_group() const;  // frozen = true
};

// Token + positional embedding rows; position i is the index within `ids`.
Tensor embed_tokens(const std::vector<int>& ids, const LmParams& params);

PromptBundle make_prompt_bundle(const std::string& text, const LmParams& params);

// Row order of the concatenated sequence fed to the blocks.
enum class SequenceOrder { features_first, prompt_first };

struct LmOut {
  Tensor h_llm;  // rows aligned with the projected node features
  Tensor p_llm;  // rows aligned with the prompt
  Tensor full;   // whole output sequence, for slice checks
  Eigen::Index feature_start = 0;  // feature span within `full`
};

// [H^llm, P^llm] = blocks(concat(H^proj, P)). The prompt may be empty
// (zero rows). Throws ConfigError when the sequence exceeds max_seq_len.
LmOut llm_forward(const Tensor& h_proj, const Tensor& prompt_embedded,
                  SequenceOrder order, const LmParams& params);

// Order-stable digest over every parameter byte; unchanged across training.
std::uint64_t freeze_fingerprint(const LmParams& params);

// Ablation wiring checks count forward passes here.
std::uint64_t lm_forward_calls();
void reset_lm_forward_calls();

}  // namespace equifuse
