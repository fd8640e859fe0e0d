#pragma once

// Shared fixtures for the test suites: conversions into the oracle types
// and small random instances.

#include <vector>

#include "equifuse/mlp.hpp"
#include "equifuse/geometry.hpp"
#include "oracles.hpp"

namespace testutil {

using namespace equifuse;

inline oracle::Grid to_grid(const Mat& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline Mat from_grid(const oracle::Grid& g) {
  Mat m(static_cast<Eigen::Index>(g.size()),
        g.empty() ? 0 : static_cast<Eigen::Index>(g[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = g[r][c];
  return m;
}

inline std::vector<oracle::MlpLayer> to_oracle(const Mlp& net) {
  std::vector<oracle::MlpLayer> layers;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    oracle::MlpLayer layer;
    layer.w = to_grid(net.weights[l].value_matrix());
    const Vec& b = net.biases[l].value();
    layer.b.assign(b.data(), b.data() + b.size());
    layers.push_back(std::move(layer));
  }
  return layers;
}

inline Mat random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng,
                         double scale = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
  return m;
}

inline MatX3 random_coords(Eigen::Index n, Rng& rng, double scale = 1.0) {
  return MatX3(random_matrix(n, 3, rng, scale));
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Mat& a, const oracle::Grid& g) {
  return max_abs_diff(a, from_grid(g));
}

// Small random graph with every node reachable (ring plus chords).
inline GeometricGraph random_graph(int n, Eigen::Index feat_width, Rng& rng) {
  GeometricGraph g;
  g.features = random_matrix(n, feat_width, rng);
  g.coords = random_coords(n, rng);
  g.edges = random_connected_edges(n, 3.0, rng);
  return g;
}

}  // namespace testutil
