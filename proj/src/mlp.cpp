#include "equifuse/mlp.hpp"

#include <cmath>

namespace equifuse {

Tensor glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < fan_in; ++i)
    for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-a, a);
  return Tensor::from_matrix(w, true);
}

Mlp Mlp::create(const std::vector<Eigen::Index>& widths, Rng& rng,
                bool final_activation, bool zero_final) {
  if (widths.size() < 2)
    throw ConfigError("mlp: need at least one layer, got " +
                      std::to_string(widths.size()) + " widths");
  Mlp net;
  net.final_activation = final_activation;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    if (last && zero_final) {
      net.weights.push_back(
          Tensor::zeros({widths[i], widths[i + 1]}, true));
    } else {
      net.weights.push_back(glorot_uniform(widths[i], widths[i + 1], rng));
    }
    net.biases.push_back(Tensor::zeros({widths[i + 1]}, true));
  }
  return net;
}

Tensor Mlp::forward(const Tensor& x) const {
  if (weights.empty()) throw ConfigError("mlp: empty layer list");
  Tensor h = x;
  for (size_t i = 0; i < weights.size(); ++i) {
    h = affine(h, weights[i], biases[i]);
    const bool last = i + 1 == weights.size();
    if (!last || final_activation) h = silu(h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix,
                  std::vector<NamedTensor>& out) const {
  for (size_t i = 0; i < weights.size(); ++i) {
    out.push_back({prefix + ".w" + std::to_string(i), weights[i]});
    out.push_back({prefix + ".b" + std::to_string(i), biases[i]});
  }
}

}  // namespace equifuse
