#include "equifuse/adapter.hpp"

namespace equifuse {

AdapterParams AdapterParams::create(Eigen::Index feat_width, Eigen::Index d_llm,
                                    Eigen::Index msg_width, Eigen::Index hidden,
                                    int n_frames, Rng& rng) {
  if (n_frames < 1) throw ConfigError("adapter: n_frames must be >= 1");
  AdapterParams p;
  p.proj_in_w = glorot_uniform(feat_width, d_llm, rng);
  p.proj_in_b = Tensor::zeros({d_llm}, true);
  p.proj_out_w = Tensor::zeros({d_llm, feat_width}, true);
  p.proj_out_b = Tensor::zeros({feat_width}, true);
  p.egnn = EgnnLayerParams::create(feat_width, msg_width, hidden, n_frames, rng);
  return p;
}

void AdapterParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"proj_in.w", proj_in_w});
  out.push_back({"proj_in.b", proj_in_b});
  out.push_back({"proj_out.w", proj_out_w});
  out.push_back({"proj_out.b", proj_out_b});
  collect_egnn_only(out);
}

void AdapterParams::collect_egnn_only(std::vector<NamedTensor>& out) const {
  egnn.collect("egnn", out);
}

Tensor project_in(const Tensor& h_prime, const AdapterParams& params) {
  if (h_prime.cols() != params.proj_in_w.rows())
    throw DimensionError("project_in: features " + shape_str(h_prime.shape()) +
                         " vs projector " + shape_str(params.proj_in_w.shape()));
  return affine(h_prime, params.proj_in_w, params.proj_in_b);
}

Tensor reproject_residual(const Tensor& h_llm, const Tensor& h_prime,
                          const AdapterParams& params) {
  if (h_llm.cols() != params.proj_out_w.rows())
    throw DimensionError("reproject_residual: " + shape_str(h_llm.shape()) +
                         " vs projector " + shape_str(params.proj_out_w.shape()));
  if (h_llm.rows() != h_prime.rows())
    throw DimensionError("reproject_residual: row mismatch " +
                         shape_str(h_llm.shape()) + " vs " +
                         shape_str(h_prime.shape()));
  return add(h_prime, affine(h_llm, params.proj_out_w, params.proj_out_b));
}

AdapterOutput adapt(const Tensor& x_prime, const Tensor& h_r,
                    const EdgeList& edges, const AdapterParams& params) {
  EgnnOut out = egnn_layer(x_prime, h_r, edges, params.egnn);
  return {std::move(out.coords), std::move(out.feats)};
}

}  // namespace equifuse
