#pragma once

#include <utility>
#include <vector>

#include "equifuse/rng.hpp"
#include "equifuse/types.hpp"

namespace equifuse {

using EdgeList = std::vector<std::pair<int, int>>;

// A static geometric graph: per-node invariant features, 3D coordinates
// (one row per node), and directed edges. An edge (j, i) makes j a
// neighbor of i, i.e. j contributes messages to i.
struct GeometricGraph {
  Mat features;  // N x c
  MatX3 coords;  // N x 3
  EdgeList edges;

  int n_nodes() const { return static_cast<int>(coords.rows()); }
  void validate() const;  // endpoints in range, no self-loops, row counts agree
};

// Ordered stack of coordinate frames over one shared skeleton
// (features and edges do not change across frames).
struct Trajectory {
  GeometricGraph skeleton;  // coords hold the first frame
  std::vector<MatX3> frames;

  int n_frames() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

// Graph view of a trajectory at one frame.
GeometricGraph at_frame(const Trajectory& traj, int t);

// Rigid transform x -> x Q + t with Q orthogonal (det +/-1). Rows of a
// coordinate matrix are transformed as row vectors.
class TransformE3 {
 public:
  TransformE3(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  MatX3 apply(const MatX3& coords) const;
  RowVec3 apply(const RowVec3& x) const;

  // Composition: (a.after(b)).apply(x) == a.apply(b.apply(x)).
  TransformE3 after(const TransformE3& inner) const;

  static TransformE3 identity();
  // Rotation about z by `angle` radians (counterclockwise for row vectors).
  static TransformE3 rotation_z(double angle);
  // Haar-ish random orthogonal Q via QR of a Gaussian matrix with a
  // sign-fixed diagonal; when reflect is set the result has det(Q) = -1.
  static TransformE3 random(Rng& rng, bool reflect, double translation_scale = 2.0);

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

GeometricGraph apply_transform(const GeometricGraph& g, const TransformE3& tf);
Trajectory apply_transform(const Trajectory& traj, const TransformE3& tf);

// Euclidean length of every edge, in edge-list order.
std::vector<double> edge_distances(const GeometricGraph& g);

// N(i) for every node: lists of sources j with (j, i) in edges.
std::vector<std::vector<int>> neighbor_lists(int n_nodes, const EdgeList& edges);

// Random connected undirected graph (both edge directions emitted):
// a random spanning tree plus extra edges up to the requested mean degree.
EdgeList random_connected_edges(int n_nodes, double mean_degree, Rng& rng);

// Both directions of every pair within `radius`. Kept for attaching real
// datasets whose connectivity is not given explicitly.
EdgeList radius_graph_edges(const MatX3& coords, double radius);

// Residue-level structure for the sequence-design task: a category per
// residue (vocabulary 20) and 4 backbone atom positions per residue.
struct ResidueStructure {
  std::vector<int> categories;
  std::vector<Mat43> backbone;

  int n_residues() const { return static_cast<int>(categories.size()); }
  void validate() const;
};

ResidueStructure apply_transform(const ResidueStructure& rs,
                                 const TransformE3& tf);

inline constexpr int kNumResidueCategories = 20;
inline constexpr int kAtomsPerResidue = 4;

}  // namespace equifuse
