#include "equifuse/pipeline.hpp"

#include <algorithm>

namespace equifuse {

namespace {

bool uses_lm(Variant v) { return v != Variant::encoder_only; }
bool uses_adapter(Variant v) {
  return v == Variant::full || v == Variant::encoder_only;
}
bool is_bridge(Variant v) {
  return v == Variant::llm_then_encoder ||
         v == Variant::llm_no_prompt_then_encoder;
}

}  // namespace

Model Model::create(const ModelConfig& cfg, const PromptSpec& prompt) {
  if (cfg.task == TaskKind::dynamics && cfg.t_in < 2)
    throw ConfigError("model: dynamics needs T >= 2");
  if (cfg.f_out < 1) throw ConfigError("model: F >= 1 required");
  if (cfg.task == TaskKind::design && cfg.f_out != 1)
    throw ConfigError("model: the design task uses F = 1");

  Model m;
  m.cfg_ = cfg;
  m.prompt_ = prompt;
  m.prompt_.include_object = cfg.use_object;
  m.prompt_.include_statistics = cfg.use_statistics;
  m.prompt_.decimals = cfg.prompt_decimals;

  EncoderConfig ec;
  ec.input_feature_width =
      is_bridge(cfg.variant) ? cfg.hidden : cfg.feature_width;
  ec.temporal_frames = cfg.task == TaskKind::dynamics ? cfg.t_in : 0;
  ec.hidden = cfg.hidden;
  ec.feat_width = cfg.hidden;
  ec.msg_width = cfg.hidden;
  ec.n_layers = cfg.encoder_layers;
  ec.out_frames = is_bridge(cfg.variant) ? cfg.f_out : 1;

  Rng enc_rng(split_seed(cfg.seed, 1));
  m.encoder_ = EncoderParams::create(ec, enc_rng);

  if (uses_lm(cfg.variant)) {
    Rng lm_rng(split_seed(cfg.seed, 2));
    m.lm_ = LmParams::create(cfg.lm, lm_rng);
  }
  if (uses_adapter(cfg.variant)) {
    Rng ad_rng(split_seed(cfg.seed, 3));
    m.adapter_ = AdapterParams::create(cfg.hidden, cfg.lm.d_model, cfg.hidden,
                                       cfg.hidden, cfg.f_out, ad_rng);
  }
  if (is_bridge(cfg.variant)) {
    Rng br_rng(split_seed(cfg.seed, 4));
    m.bridge_in_w_ = glorot_uniform(cfg.feature_width, cfg.lm.d_model, br_rng);
    m.bridge_in_b_ = Tensor::zeros({cfg.lm.d_model}, true);
    m.bridge_out_w_ = glorot_uniform(cfg.lm.d_model, cfg.hidden, br_rng);
    m.bridge_out_b_ = Tensor::zeros({cfg.hidden}, true);
  }
  if (cfg.task == TaskKind::design) {
    Rng head_rng(split_seed(cfg.seed, 5));
    m.head_w_ = glorot_uniform(cfg.hidden, kNumResidueCategories, head_rng);
    m.head_b_ = Tensor::zeros({kNumResidueCategories}, true);
  }
  return m;
}

Model Model::create(const ModelConfig& cfg) {
  return create(cfg, cfg.task == TaskKind::dynamics ? default_dynamics_prompt()
                                                    : default_design_prompt());
}

std::vector<ParamGroup> Model::param_groups() const {
  std::vector<ParamGroup> groups;
  {
    ParamGroup g;
    g.name = "encoder";
    encoder_.collect(g.tensors);
    groups.push_back(std::move(g));
  }
  if (uses_adapter(cfg_.variant)) {
    ParamGroup g;
    g.name = "adapter";
    if (cfg_.variant == Variant::full)
      adapter_.collect(g.tensors);
    else
      adapter_.collect_egnn_only(g.tensors);
    groups.push_back(std::move(g));
  }
  if (is_bridge(cfg_.variant)) {
    ParamGroup g;
    g.name = "bridge";
    g.tensors.push_back({"in.w", bridge_in_w_});
    g.tensors.push_back({"in.b", bridge_in_b_});
    g.tensors.push_back({"out.w", bridge_out_w_});
    g.tensors.push_back({"out.b", bridge_out_b_});
    groups.push_back(std::move(g));
  }
  if (cfg_.task == TaskKind::design) {
    ParamGroup g;
    g.name = "head";
    g.tensors.push_back({"w", head_w_});
    g.tensors.push_back({"b", head_b_});
    groups.push_back(std::move(g));
  }
  if (uses_lm(cfg_.variant)) groups.push_back(lm_.param_group());
  return groups;
}

std::string Model::prompt_text(const GeometricGraph& stats_graph) const {
  PromptContext ctx;
  ctx.t_in = cfg_.t_in;
  ctx.f_out = cfg_.f_out;
  ctx.n_nodes = stats_graph.n_nodes();
  if (!stats_graph.edges.empty()) {
    ctx.stats = compute_statistics(stats_graph);
    ctx.has_stats = true;
  }
  return render_prompt(prompt_, ctx);
}

PromptBundle Model::build_prompt(const GeometricGraph& stats_graph,
                                 const std::vector<MatX3>* window) const {
  GeometricGraph g = stats_graph;
  if (window && !window->empty()) {
    if (cfg_.stats_scope == StatsScope::last_frame) {
      g.coords = window->back();
    } else {
      // Pool edge distances over every input frame: statistics of the
      // whole window rather than its last frame.
      PromptContext ctx;
      ctx.t_in = cfg_.t_in;
      ctx.f_out = cfg_.f_out;
      ctx.n_nodes = g.n_nodes();
      if (!g.edges.empty()) {
        double mn = 0, mx = 0, acc = 0;
        size_t count = 0;
        for (const MatX3& frame : *window) {
          GeometricGraph gf = g;
          gf.coords = frame;
          for (double d : edge_distances(gf)) {
            mn = count == 0 ? d : std::min(mn, d);
            mx = count == 0 ? d : std::max(mx, d);
            acc += d;
            ++count;
          }
        }
        ctx.stats = {mn, mx, acc / static_cast<double>(count)};
        ctx.has_stats = true;
      }
      return make_prompt_bundle(render_prompt(prompt_, ctx), lm_);
    }
  }
  return make_prompt_bundle(prompt_text(g), lm_);
}

DynamicsOutput Model::forward_dynamics(const GeometricGraph& skeleton,
                                       const std::vector<MatX3>& window) const {
  if (cfg_.task != TaskKind::dynamics)
    throw ContractError("forward_dynamics: model configured for design");
  skeleton.validate();

  const bool prompt_on =
      cfg_.use_prompt && cfg_.variant != Variant::llm_no_prompt_then_encoder &&
      uses_lm(cfg_.variant);

  if (is_bridge(cfg_.variant)) {
    Tensor raw = Tensor::from_matrix(skeleton.features);
    Tensor x = affine(raw, bridge_in_w_, bridge_in_b_);
    Tensor p = prompt_on ? build_prompt(skeleton, &window).embedded
                         : Tensor::zeros({0, cfg_.lm.d_model});
    LmOut lm_out = llm_forward(x, p, cfg_.layout, lm_);
    Tensor h_in = affine(lm_out.h_llm, bridge_out_w_, bridge_out_b_);
    EncodedGraph enc = encode(window, h_in, skeleton.edges, encoder_);
    return {std::move(enc.coords), std::move(enc.feats)};
  }

  EncodedGraph enc = encode(window, skeleton.features, skeleton.edges, encoder_);
  if (cfg_.variant == Variant::encoder_only) {
    AdapterOutput out = adapt(enc.coords[0], enc.feats, skeleton.edges, adapter_);
    return {std::move(out.coords), std::move(out.feats)};
  }

  Tensor h_proj = project_in(enc.feats, adapter_);
  Tensor p = prompt_on ? build_prompt(skeleton, &window).embedded
                       : Tensor::zeros({0, cfg_.lm.d_model});
  LmOut lm_out = llm_forward(h_proj, p, cfg_.layout, lm_);
  Tensor h_r = reproject_residual(lm_out.h_llm, enc.feats, adapter_);
  AdapterOutput out = adapt(enc.coords[0], h_r, skeleton.edges, adapter_);
  return {std::move(out.coords), std::move(out.feats)};
}

DesignOutput Model::forward_design(const ResidueGraph& rg) const {
  if (cfg_.task != TaskKind::design)
    throw ContractError("forward_design: model configured for dynamics");
  const bool prompt_on =
      cfg_.use_prompt && cfg_.variant != Variant::llm_no_prompt_then_encoder &&
      uses_lm(cfg_.variant);

  Tensor atom_feats;
  EncodedGraph enc;
  if (is_bridge(cfg_.variant)) {
    Tensor raw = Tensor::from_matrix(rg.graph.features);
    Tensor x = affine(raw, bridge_in_w_, bridge_in_b_);
    Tensor p = prompt_on ? build_prompt(rg.graph, nullptr).embedded
                         : Tensor::zeros({0, cfg_.lm.d_model});
    LmOut lm_out = llm_forward(x, p, cfg_.layout, lm_);
    Tensor h_in = affine(lm_out.h_llm, bridge_out_w_, bridge_out_b_);
    enc = encode_static(rg.graph, h_in, encoder_);
    atom_feats = enc.feats;
  } else {
    enc = encode_static(rg.graph, Tensor::from_matrix(rg.graph.features),
                        encoder_);
    if (cfg_.variant == Variant::encoder_only) {
      AdapterOutput out = adapt(enc.coords[0], enc.feats, rg.graph.edges, adapter_);
      enc.coords = std::move(out.coords);
      atom_feats = std::move(out.feats);
    } else {
      Tensor h_proj = project_in(enc.feats, adapter_);
      Tensor p = prompt_on ? build_prompt(rg.graph, nullptr).embedded
                           : Tensor::zeros({0, cfg_.lm.d_model});
      LmOut lm_out = llm_forward(h_proj, p, cfg_.layout, lm_);
      Tensor h_r = reproject_residual(lm_out.h_llm, enc.feats, adapter_);
      AdapterOutput out = adapt(enc.coords[0], h_r, rg.graph.edges, adapter_);
      enc.coords = std::move(out.coords);
      atom_feats = std::move(out.feats);
    }
  }

  // Mean-pool the four atom rows of each residue, then the category head.
  Tensor pooled =
      scale(scatter_rows(atom_feats, rg.residue_of, rg.n_residues), 0.25);
  DesignOutput out;
  out.logits = affine(pooled, head_w_, head_b_);
  out.probabilities = softmax_rows(out.logits);
  out.backbone = enc.coords[0];
  out.feats = std::move(atom_feats);
  return out;
}

std::vector<MatX3> Model::predict_frames(const GeometricGraph& skeleton,
                                         const std::vector<MatX3>& window) const {
  DynamicsOutput out = forward_dynamics(skeleton, window);
  std::vector<MatX3> frames;
  frames.reserve(out.frames.size());
  for (const Tensor& f : out.frames) frames.push_back(MatX3(f.value_matrix()));
  return frames;
}

ResidueStructure Model::predict_design(const ResidueStructure& input,
                                       Mat* probabilities) const {
  ResidueGraph rg = residue_to_graph(input);
  DesignOutput out = forward_design(rg);
  Mat probs = out.probabilities.value_matrix();
  if (probabilities) *probabilities = probs;
  ResidueStructure pred;
  pred.categories = argmax_categories(probs);
  Mat bb = out.backbone.value_matrix();
  for (int i = 0; i < rg.n_residues; ++i)
    pred.backbone.push_back(
        Mat43(bb.middleRows(i * kAtomsPerResidue, kAtomsPerResidue)));
  return pred;
}

}  // namespace equifuse
