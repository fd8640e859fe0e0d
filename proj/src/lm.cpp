#include "equifuse/lm.hpp"

#include <atomic>
#include <cmath>

namespace equifuse {

namespace {
std::atomic<std::uint64_t> g_forward_calls{0};
}

LmParams LmParams::create(const LmConfig& cfg, Rng& rng) {
  if (cfg.d_model % cfg.n_heads != 0)
    throw ConfigError("lm: d_model " + std::to_string(cfg.d_model) +
                      " not divisible by n_heads " + std::to_string(cfg.n_heads));
  LmParams p;
  p.cfg = cfg;
  p.token_embedding = glorot_uniform(cfg.vocab, cfg.d_model, rng);
  p.positional_embedding = glorot_uniform(cfg.max_seq_len, cfg.d_model, rng);
  for (int b = 0; b < cfg.n_blocks; ++b) {
    LmBlockParams blk;
    blk.wq = glorot_uniform(cfg.d_model, cfg.d_model, rng);
    blk.wk = glorot_uniform(cfg.d_model, cfg.d_model, rng);
    blk.wv = glorot_uniform(cfg.d_model, cfg.d_model, rng);
    blk.wo = glorot_uniform(cfg.d_model, cfg.d_model, rng);
    blk.w1 = glorot_uniform(cfg.d_model, cfg.ffn_width, rng);
    blk.b1 = Tensor::zeros({cfg.ffn_width}, true);
    blk.w2 = glorot_uniform(cfg.ffn_width, cfg.d_model, rng);
    blk.b2 = Tensor::zeros({cfg.d_model}, true);
    blk.ln1_gain = Tensor::from_vector(Vec::Ones(cfg.d_model), true);
    blk.ln1_bias = Tensor::zeros({cfg.d_model}, true);
    blk.ln2_gain = Tensor::from_vector(Vec::Ones(cfg.d_model), true);
    blk.ln2_bias = Tensor::zeros({cfg.d_model}, true);
    p.blocks.push_back(std::move(blk));
  }
  return p;
}

ParamGroup LmParams::param_group() const {
  ParamGroup g;
  g.name = "lm";
  g.frozen = true;
  g.tensors.push_back({"token_embedding", token_embedding});
  g.tensors.push_back({"positional_embedding", positional_embedding});
  for (size_t b = 0; b < blocks.size(); ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    const LmBlockParams& blk = blocks[b];
    g.tensors.push_back({p + "wq", blk.wq});
    g.tensors.push_back({p + "wk", blk.wk});
    g.tensors.push_back({p + "wv", blk.wv});
    g.tensors.push_back({p + "wo", blk.wo});
    g.tensors.push_back({p + "w1", blk.w1});
    g.tensors.push_back({p + "b1", blk.b1});
    g.tensors.push_back({p + "w2", blk.w2});
    g.tensors.push_back({p + "b2", blk.b2});
    g.tensors.push_back({p + "ln1_gain", blk.ln1_gain});
    g.tensors.push_back({p + "ln1_bias", blk.ln1_bias});
    g.tensors.push_back({p + "ln2_gain", blk.ln2_gain});
    g.tensors.push_back({p + "ln2_bias", blk.ln2_bias});
  }
  return g;
}

Tensor embed_tokens(const std::vector<int>& ids, const LmParams& params) {
  if (ids.empty()) return Tensor::zeros({0, params.cfg.d_model});
  for (int id : ids)
    if (id < 0 || id >= params.cfg.vocab)
      throw ContractError("embed_tokens: id " + std::to_string(id) +
                          " outside vocabulary of " +
                          std::to_string(params.cfg.vocab));
  if (static_cast<Eigen::Index>(ids.size()) > params.cfg.max_seq_len)
    throw ConfigError("embed_tokens: " + std::to_string(ids.size()) +
                      " tokens exceed max_seq_len " +
                      std::to_string(params.cfg.max_seq_len));
  std::vector<int> positions(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
  return add(gather_rows(params.token_embedding, ids),
             gather_rows(params.positional_embedding, positions));
}

PromptBundle make_prompt_bundle(const std::string& text,
                                const LmParams& params) {
  PromptBundle b;
  b.text = text;
  b.token_ids = tokenize(text);
  b.embedded = embed_tokens(b.token_ids, params);
  return b;
}

namespace {

Tensor attention(const Tensor& x, const LmBlockParams& blk, int n_heads) {
  const Eigen::Index d = x.cols();
  const Eigen::Index dh = d / n_heads;
  Tensor q = matmul(x, blk.wq);
  Tensor k = matmul(x, blk.wk);
  Tensor v = matmul(x, blk.wv);
  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = cols_slice(q, h * dh, dh);
    Tensor kh = cols_slice(k, h * dh, dh);
    Tensor vh = cols_slice(v, h * dh, dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    heads.push_back(matmul(softmax_rows(scores), vh));
  }
  return matmul(hstack(heads), blk.wo);
}

Tensor block_forward(const Tensor& x, const LmBlockParams& blk, int n_heads) {
  Tensor a = add(x, attention(layer_norm(x, blk.ln1_gain, blk.ln1_bias), blk,
                              n_heads));
  Tensor ffn_in = layer_norm(a, blk.ln2_gain, blk.ln2_bias);
  Tensor ffn = affine(silu(affine(ffn_in, blk.w1, blk.b1)), blk.w2, blk.b2);
  return add(a, ffn);
}

}  // namespace

LmOut llm_forward(const Tensor& h_proj, const Tensor& prompt_embedded,
                  SequenceOrder order, const LmParams& params) {
  g_forward_calls.fetch_add(1, std::memory_order_relaxed);
  if (h_proj.cols() != params.cfg.d_model)
    throw DimensionError("llm_forward: features " + shape_str(h_proj.shape()) +
                         " do not match d_model " +
                         std::to_string(params.cfg.d_model));
  const Eigen::Index n = h_proj.rows();
  const Eigen::Index l =
      prompt_embedded.defined() ? prompt_embedded.rows() : 0;
  if (n + l > params.cfg.max_seq_len)
    throw ConfigError("llm_forward: sequence of " + std::to_string(n + l) +
                      " rows exceeds max_seq_len " +
                      std::to_string(params.cfg.max_seq_len));

  Tensor x;
  Eigen::Index feature_start = 0;
  if (l == 0) {
    x = h_proj;
  } else if (order == SequenceOrder::features_first) {
    x = vstack({h_proj, prompt_embedded});
    feature_start = 0;
  } else {
    x = vstack({prompt_embedded, h_proj});
    feature_start = l;
  }

  for (const LmBlockParams& blk : params.blocks)
    x = block_forward(x, blk, params.cfg.n_heads);

  LmOut out;
  out.full = x;
  out.feature_start = feature_start;
  out.h_llm = rows_slice(x, feature_start, n);
  out.p_llm = l == 0 ? Tensor::zeros({0, params.cfg.d_model})
                     : rows_slice(x, feature_start == 0 ? n : 0, l);
  return out;
}

std::uint64_t freeze_fingerprint(const LmParams& params) {
  return group_fingerprint(params.param_group());
}

std::uint64_t lm_forward_calls() {
  return g_forward_calls.load(std::memory_order_relaxed);
}

void reset_lm_forward_calls() { g_forward_calls.store(0); }

}  // namespace equifuse
