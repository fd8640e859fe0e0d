#include "equifuse/encoder.hpp"

namespace equifuse {

EgnnLayerParams EgnnLayerParams::create(Eigen::Index feat_width,
                                        Eigen::Index msg_width,
                                        Eigen::Index hidden, int n_coord_heads,
                                        Rng& rng) {
  EgnnLayerParams p;
  p.message = Mlp::create({2 * feat_width + 1, hidden, msg_width}, rng,
                          /*final_activation=*/true);
  p.feature_update = Mlp::create({feat_width + msg_width, hidden, feat_width}, rng);
  for (int h = 0; h < n_coord_heads; ++h)
    p.coord_heads.push_back(Mlp::create({msg_width, hidden, 1}, rng,
                                        /*final_activation=*/false,
                                        /*zero_final=*/true));
  return p;
}

void EgnnLayerParams::collect(const std::string& prefix,
                              std::vector<NamedTensor>& out) const {
  message.collect(prefix + ".msg", out);
  feature_update.collect(prefix + ".feat", out);
  for (size_t h = 0; h < coord_heads.size(); ++h)
    coord_heads[h].collect(prefix + ".coord" + std::to_string(h), out);
}

EgnnOut egnn_layer(const Tensor& coords, const Tensor& feats,
                   const EdgeList& edges, const EgnnLayerParams& params) {
  const Eigen::Index n = coords.rows();
  if (feats.rows() != n)
    throw DimensionError("egnn_layer: coords " + shape_str(coords.shape()) +
                         " vs feats " + shape_str(feats.shape()));
  if (params.coord_heads.empty())
    throw ConfigError("egnn_layer: at least one coordinate head required");

  EgnnOut out;
  if (edges.empty()) {
    // No messages anywhere: features still get the self-update with a zero
    // message sum, coordinates pass through.
    Tensor zero_msg = Tensor::zeros({n, params.feature_update.in_width() - feats.cols()});
    out.feats = add(feats, params.feature_update.forward(hstack({feats, zero_msg})));
    for (size_t h = 0; h < params.coord_heads.size(); ++h)
      out.coords.push_back(coords);
    return out;
  }

  std::vector<int> src, dst;
  src.reserve(edges.size());
  dst.reserve(edges.size());
  for (const auto& [j, i] : edges) {
    src.push_back(j);  // sender
    dst.push_back(i);  // receiver
  }

  Tensor h_i = gather_rows(feats, dst);
  Tensor h_j = gather_rows(feats, src);
  Tensor diff = sub(gather_rows(coords, dst), gather_rows(coords, src));
  Tensor dist = row_norm(diff);
  Tensor messages = params.message.forward(hstack({h_i, h_j, dist}));

  Tensor msg_sum = scatter_rows(messages, dst, n);
  out.feats =
      add(feats, params.feature_update.forward(hstack({feats, msg_sum})));

  // 1/|N(i)| with isolated nodes pinned to zero.
  Vec inv_deg = Vec::Zero(n);
  for (int i : dst) inv_deg[i] += 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    inv_deg[i] = inv_deg[i] > 0.0 ? 1.0 / inv_deg[i] : 0.0;
  Mat inv_deg_col(n, 1);
  inv_deg_col.col(0) = inv_deg;
  Tensor inv_deg_t = Tensor::from_matrix(inv_deg_col);

  for (const Mlp& head : params.coord_heads) {
    Tensor weights = head.forward(messages);  // one scalar per edge
    Tensor update = scatter_rows(scale_rows(diff, weights), dst, n);
    out.coords.push_back(add(coords, scale_rows(update, inv_deg_t)));
  }
  return out;
}

Tensor temporal_embed(const std::vector<MatX3>& window,
                      const Tensor& node_features, const Mlp& embed) {
  if (window.size() < 2)
    throw ContractError("temporal_embed: needs at least 2 frames, got " +
                        std::to_string(window.size()));
  const Eigen::Index n = window.front().rows();
  if (node_features.rows() != n)
    throw DimensionError("temporal_embed: feature rows " +
                         shape_str(node_features.shape()) + " vs " +
                         std::to_string(n) + " nodes");
  Mat speeds(n, static_cast<Eigen::Index>(window.size()) - 1);
  for (size_t t = 1; t < window.size(); ++t)
    speeds.col(static_cast<Eigen::Index>(t) - 1) =
        (window[t] - window[t - 1]).rowwise().norm();
  Tensor in = hstack({node_features, Tensor::from_matrix(speeds)});
  return embed.forward(in);
}

Tensor temporal_embed(const std::vector<MatX3>& window,
                      const Mat& node_features, const Mlp& embed) {
  return temporal_embed(window, Tensor::from_matrix(node_features), embed);
}

EncoderParams EncoderParams::create(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.n_layers < 1) throw ConfigError("encoder: n_layers must be >= 1");
  if (cfg.out_frames < 1) throw ConfigError("encoder: out_frames must be >= 1");
  EncoderParams p;
  p.cfg = cfg;
  const Eigen::Index t_extra =
      cfg.temporal_frames > 0 ? cfg.temporal_frames - 1 : 0;
  p.embed = Mlp::create(
      {cfg.input_feature_width + t_extra, cfg.hidden, cfg.feat_width}, rng);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const bool last = l + 1 == cfg.n_layers;
    p.layers.push_back(EgnnLayerParams::create(cfg.feat_width, cfg.msg_width,
                                               cfg.hidden,
                                               last ? cfg.out_frames : 1, rng));
  }
  return p;
}

void EncoderParams::collect(std::vector<NamedTensor>& out) const {
  embed.collect("embed", out);
  for (size_t l = 0; l < layers.size(); ++l)
    layers[l].collect("layer" + std::to_string(l), out);
}

namespace {

EncodedGraph run_stack(Tensor coords, Tensor feats, const EdgeList& edges,
                       const EncoderParams& params) {
  EncodedGraph out;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    EgnnOut step = egnn_layer(coords, feats, edges, params.layers[l]);
    feats = step.feats;
    if (l + 1 == params.layers.size()) {
      out.coords = std::move(step.coords);
    } else {
      coords = step.coords[0];
    }
  }
  out.feats = feats;
  return out;
}

}  // namespace

EncodedGraph encode(const std::vector<MatX3>& window,
                    const Tensor& node_features, const EdgeList& edges,
                    const EncoderParams& params) {
  if (params.cfg.temporal_frames > 0 &&
      static_cast<int>(window.size()) != params.cfg.temporal_frames)
    throw ContractError("encode: window of " + std::to_string(window.size()) +
                        " frames, configured for " +
                        std::to_string(params.cfg.temporal_frames));
  Tensor feats = temporal_embed(window, node_features, params.embed);
  Tensor coords = Tensor::from_matrix(window.back());
  return run_stack(coords, feats, edges, params);
}

EncodedGraph encode(const std::vector<MatX3>& window, const Mat& node_features,
                    const EdgeList& edges, const EncoderParams& params) {
  return encode(window, Tensor::from_matrix(node_features), edges, params);
}

EncodedGraph encode_static(const GeometricGraph& g, const Tensor& node_features,
                           const EncoderParams& params) {
  Tensor feats = params.embed.forward(node_features);
  Tensor coords = Tensor::from_matrix(g.coords);
  return run_stack(coords, feats, g.edges, params);
}

}  // namespace equifuse
