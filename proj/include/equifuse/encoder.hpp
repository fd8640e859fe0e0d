#pragma once

#include "equifuse/geometry.hpp"
#include "equifuse/mlp.hpp"

namespace equifuse {

// One message-passing layer:
//   m_ij = phi_m(h_i, h_j, |x_i - x_j|)
//   h_i' = h_i + phi_h(h_i, sum_j m_ij)
//   x_i' = x_i + (1/|N(i)|) sum_j phi_x(m_ij) (x_i - x_j)
// Nodes without neighbors keep their coordinates (the update term is zero).
// `coord_heads` holds one phi_x per output coordinate set; layers inside a
// stack use a single head, multi-frame decoders use one per future frame.
struct EgnnLayerParams {
  Mlp message;                   // [2*feat + 1] -> msg_width
  Mlp feature_update;            // [feat + msg_width] -> feat
  std::vector<Mlp> coord_heads;  // msg_width -> 1, final maps zero-initialized

  static EgnnLayerParams create(Eigen::Index feat_width,
                                Eigen::Index msg_width, Eigen::Index hidden,
                                int n_coord_heads, Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

struct EgnnOut {
  std::vector<Tensor> coords;  // one [N x 3] per coordinate head
  Tensor feats;                // [N x feat]
};

EgnnOut egnn_layer(const Tensor& coords, const Tensor& feats,
                   const EdgeList& edges, const EgnnLayerParams& params);

// Per-node invariant temporal summary: node features concatenated with the
// frame-to-frame speeds |x_i^t - x_i^{t-1}|, t = 2..T, through an MLP.
// Coordinates enter only through norms of differences, so the output is
// E(3)-invariant. Requires T >= 2.
Tensor temporal_embed(const std::vector<MatX3>& window,
                      const Tensor& node_features, const Mlp& embed);
Tensor temporal_embed(const std::vector<MatX3>& window,
                      const Mat& node_features, const Mlp& embed);

struct EncoderConfig {
  Eigen::Index input_feature_width = 1;
  int temporal_frames = 10;  // T; 0 selects the static (single-frame) mode
  Eigen::Index hidden = 64;
  Eigen::Index feat_width = 64;  // width of H'
  Eigen::Index msg_width = 64;
  int n_layers = 4;
  // Coordinate heads on the final layer; >1 makes the encoder emit one
  // coordinate set per future frame (used when no separate decoder runs).
  int out_frames = 1;
};

struct EncoderParams {
  EncoderConfig cfg;
  Mlp embed;  // temporal (or static) feature embedding
  std::vector<EgnnLayerParams> layers;

  static EncoderParams create(const EncoderConfig& cfg, Rng& rng);
  void collect(std::vector<NamedTensor>& out) const;
};

struct EncodedGraph {
  std::vector<Tensor> coords;  // X'; cfg.out_frames entries
  Tensor feats;                // H'
};

// Dynamics mode: base coordinates are the last input frame, features come
// from temporal_embed, then the layer stack runs.
EncodedGraph encode(const std::vector<MatX3>& window,
                    const Tensor& node_features, const EdgeList& edges,
                    const EncoderParams& params);
EncodedGraph encode(const std::vector<MatX3>& window,
                    const Mat& node_features, const EdgeList& edges,
                    const EncoderParams& params);

// Static mode for single-frame graphs (no temporal block).
EncodedGraph encode_static(const GeometricGraph& g, const Tensor& node_features,
                           const EncoderParams& params);

}  // namespace equifuse
