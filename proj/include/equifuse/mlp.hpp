#pragma once

#include <string>
#include <vector>

#include "equifuse/autodiff.hpp"
#include "equifuse/rng.hpp"

namespace equifuse {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Glorot-uniform weight matrix: uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

// Multi-layer perceptron. Hidden layers apply SiLU; the final layer is
// affine only unless `final_activation` is set.
struct Mlp {
  std::vector<Tensor> weights;  // layer i: [widths[i] x widths[i+1]]
  std::vector<Tensor> biases;   // layer i: [widths[i+1]]
  bool final_activation = false;

  // widths = {in, hidden..., out}; needs at least one layer.
  // zero_final zero-initializes the last layer's weight and bias so the
  // whole network starts as the zero map.
  static Mlp create(const std::vector<Eigen::Index>& widths, Rng& rng,
                    bool final_activation = false, bool zero_final = false);

  Tensor forward(const Tensor& x) const;
  Eigen::Index in_width() const { return weights.front().rows(); }
  Eigen::Index out_width() const { return weights.back().cols(); }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

inline Tensor mlp_forward(const Mlp& net, const Tensor& x) {
  return net.forward(x);
}

}  // namespace equifuse
