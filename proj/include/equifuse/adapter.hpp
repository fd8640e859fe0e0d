#pragma once

#include "equifuse/encoder.hpp"

namespace equifuse {

// The invariant/equivariant seam around the sequence model: a projector
// into its width, a zero-initialized re-projection with residual fusion,
// and one EGNN layer with F coordinate heads sharing the messages.
struct AdapterParams {
  Tensor proj_in_w, proj_in_b;    // feat_width -> d_llm
  Tensor proj_out_w, proj_out_b;  // d_llm -> feat_width, zero-initialized
  EgnnLayerParams egnn;           // coord_heads.size() == F

  static AdapterParams create(Eigen::Index feat_width, Eigen::Index d_llm,
                              Eigen::Index msg_width, Eigen::Index hidden,
                              int n_frames, Rng& rng);
  void collect(std::vector<NamedTensor>& out) const;
  void collect_egnn_only(std::vector<NamedTensor>& out) const;
};

// H^proj = phi_proj(H'); a linear layer, no coordinate dependence.
Tensor project_in(const Tensor& h_prime, const AdapterParams& params);

// H^r = H' + proj_out(H^llm). With proj_out zero-initialized this is the
// identity in H', so the sequence model has no effect at step 0.
Tensor reproject_residual(const Tensor& h_llm, const Tensor& h_prime,
                          const AdapterParams& params);

struct AdapterOutput {
  std::vector<Tensor> coords;  // F predicted coordinate sets, each [N x 3]
  Tensor feats;                // H^out
};

// One EGNN layer over (X', H^r): shared messages and feature update, one
// coordinate head per future frame.
AdapterOutput adapt(const Tensor& x_prime, const Tensor& h_r,
                    const EdgeList& edges, const AdapterParams& params);

}  // namespace equifuse
