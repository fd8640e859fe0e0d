#include "equifuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace equifuse {

void GeometricGraph::validate() const {
  const int n = n_nodes();
  if (features.rows() != n)
    throw DimensionError("graph: " + std::to_string(features.rows()) +
                         " feature rows for " + std::to_string(n) + " nodes");
  for (const auto& [i, j] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw ContractError("graph: edge endpoint out of range");
    if (i == j) throw ContractError("graph: self-loop on node " + std::to_string(i));
  }
}

void Trajectory::validate() const {
  if (frames.empty()) throw ContractError("trajectory: needs at least one frame");
  skeleton.validate();
  for (const MatX3& f : frames)
    if (f.rows() != skeleton.coords.rows())
      throw DimensionError("trajectory: frame node count " +
                           std::to_string(f.rows()) + " vs skeleton " +
                           std::to_string(skeleton.coords.rows()));
}

GeometricGraph at_frame(const Trajectory& traj, int t) {
  if (t < 0 || t >= traj.n_frames())
    throw ContractError("at_frame: index " + std::to_string(t) +
                        " out of range");
  GeometricGraph g = traj.skeleton;
  g.coords = traj.frames[t];
  return g;
}

TransformE3::TransformE3(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10)
    throw ContractError("transform: matrix is not orthogonal");
}

MatX3 TransformE3::apply(const MatX3& coords) const {
  MatX3 out = coords * rotation_;
  out.rowwise() += translation_.transpose();
  return out;
}

RowVec3 TransformE3::apply(const RowVec3& x) const {
  return x * rotation_ + translation_.transpose();
}

TransformE3 TransformE3::after(const TransformE3& inner) const {
  // x -> (x Qi + ti) Qo + to = x (Qi Qo) + (ti Qo + to)
  Mat3 q = inner.rotation_ * rotation_;
  Vec3 t = rotation_.transpose() * inner.translation_ + translation_;
  return TransformE3(q, t);
}

TransformE3 TransformE3::identity() {
  return TransformE3(Mat3::Identity(), Vec3::Zero());
}

TransformE3 TransformE3::rotation_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 q;
  q << c, s, 0, -s, c, 0, 0, 0, 1;
  return TransformE3(q, Vec3::Zero());
}

TransformE3 TransformE3::random(Rng& rng, bool reflect,
                                double translation_scale) {
  Eigen::Matrix3d gauss;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(gauss);
  Eigen::Matrix3d q = qr.householderQ();
  Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  if (q.determinant() < 0) q.col(0) = -q.col(0);  // now det +1
  if (reflect) q.col(2) = -q.col(2);              // det -1
  Vec3 t;
  for (int i = 0; i < 3; ++i) t[i] = rng.normal() * translation_scale;
  return TransformE3(Mat3(q), t);
}

GeometricGraph apply_transform(const GeometricGraph& g, const TransformE3& tf) {
  GeometricGraph out = g;
  out.coords = tf.apply(g.coords);
  return out;
}

Trajectory apply_transform(const Trajectory& traj, const TransformE3& tf) {
  Trajectory out = traj;
  out.skeleton.coords = tf.apply(traj.skeleton.coords);
  for (size_t t = 0; t < traj.frames.size(); ++t)
    out.frames[t] = tf.apply(traj.frames[t]);
  return out;
}

std::vector<double> edge_distances(const GeometricGraph& g) {
  std::vector<double> out;
  out.reserve(g.edges.size());
  for (const auto& [i, j] : g.edges)
    out.push_back((g.coords.row(i) - g.coords.row(j)).norm());
  return out;
}

std::vector<std::vector<int>> neighbor_lists(int n_nodes,
                                             const EdgeList& edges) {
  std::vector<std::vector<int>> nbrs(n_nodes);
  for (const auto& [src, dst] : edges) nbrs[dst].push_back(src);
  return nbrs;
}

EdgeList random_connected_edges(int n_nodes, double mean_degree, Rng& rng) {
  if (n_nodes < 2) throw ContractError("random graph: need at least 2 nodes");
  std::vector<int> order(n_nodes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::vector<std::pair<int, int>> undirected;
  auto has = [&undirected](int a, int b) {
    return std::find(undirected.begin(), undirected.end(),
                     std::make_pair(std::min(a, b), std::max(a, b))) !=
           undirected.end();
  };
  for (int k = 1; k < n_nodes; ++k) {
    int parent = order[rng.integer(static_cast<std::uint64_t>(k))];
    undirected.emplace_back(std::min(order[k], parent),
                            std::max(order[k], parent));
  }
  const size_t max_pairs = static_cast<size_t>(n_nodes) * (n_nodes - 1) / 2;
  const size_t target =
      std::min(max_pairs, static_cast<size_t>(mean_degree * n_nodes / 2.0));
  size_t attempts = 0;
  while (undirected.size() < target && attempts < 50 * max_pairs) {
    ++attempts;
    int a = static_cast<int>(rng.integer(n_nodes));
    int b = static_cast<int>(rng.integer(n_nodes));
    if (a == b || has(a, b)) continue;
    undirected.emplace_back(std::min(a, b), std::max(a, b));
  }
  EdgeList edges;
  for (const auto& [a, b] : undirected) {
    edges.emplace_back(a, b);
    edges.emplace_back(b, a);
  }
  return edges;
}

EdgeList radius_graph_edges(const MatX3& coords, double radius) {
  EdgeList edges;
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index j = i + 1; j < coords.rows(); ++j)
      if ((coords.row(i) - coords.row(j)).norm() <= radius) {
        edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        edges.emplace_back(static_cast<int>(j), static_cast<int>(i));
      }
  return edges;
}

void ResidueStructure::validate() const {
  if (backbone.size() != categories.size())
    throw DimensionError("residues: " + std::to_string(backbone.size()) +
                         " backbones for " + std::to_string(categories.size()) +
                         " categories");
  for (int c : categories)
    if (c < 0 || c >= kNumResidueCategories)
      throw ContractError("residues: category " + std::to_string(c) +
                          " out of range");
}

ResidueStructure apply_transform(const ResidueStructure& rs,
                                 const TransformE3& tf) {
  ResidueStructure out = rs;
  for (size_t i = 0; i < rs.backbone.size(); ++i) {
    MatX3 coords = rs.backbone[i];
    out.backbone[i] = tf.apply(coords);
  }
  return out;
}

}  // namespace equifuse
