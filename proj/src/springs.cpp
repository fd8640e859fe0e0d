#include "equifuse/springs.hpp"

#include <cmath>

namespace equifuse {

std::vector<MatX3> simulate_springs(
    const MatX3& x0, const MatX3& v0,
    const std::vector<std::pair<int, int>>& undirected,
    const Vec& rest_lengths, double stiffness, double damping, double dt,
    int n_frames) {
  if (n_frames < 1) throw ContractError("simulate_springs: n_frames >= 1");
  if (rest_lengths.size() != static_cast<Eigen::Index>(undirected.size()))
    throw DimensionError("simulate_springs: rest length per spring required");
  std::vector<MatX3> frames;
  frames.reserve(n_frames);
  MatX3 x = x0, v = v0;
  frames.push_back(x);
  for (int step = 1; step < n_frames; ++step) {
    MatX3 force = MatX3::Zero(x.rows(), 3);
    for (size_t e = 0; e < undirected.size(); ++e) {
      const auto& [i, j] = undirected[e];
      RowVec3 d = x.row(i) - x.row(j);
      const double len = d.norm();
      if (len > 0.0) {
        RowVec3 f = -stiffness * (len - rest_lengths[e]) / len * d;
        force.row(i) += f;
        force.row(j) -= f;
      }
    }
    force -= damping * v;
    v += dt * force;  // unit masses
    x += dt * v;
    if (x.cwiseAbs().maxCoeff() > 1e6)
      throw DataError(
          "spring system diverged (|coordinate| > 1e6); use a smaller dt");
    frames.push_back(x);
  }
  return frames;
}

Trajectory gen_spring_system(const SpringSystemConfig& cfg) {
  if (cfg.n_nodes < 2)
    throw ContractError("gen_spring_system: need at least 2 nodes");
  Rng rng(split_seed(cfg.seed, 7));
  EdgeList edges = random_connected_edges(cfg.n_nodes, cfg.mean_degree, rng);
  std::vector<std::pair<int, int>> undirected;
  for (const auto& [i, j] : edges)
    if (i < j) undirected.emplace_back(i, j);

  MatX3 x0(cfg.n_nodes, 3), v0(cfg.n_nodes, 3);
  for (int i = 0; i < cfg.n_nodes; ++i)
    for (int k = 0; k < 3; ++k) {
      x0(i, k) = rng.normal() * cfg.pos_scale;
      v0(i, k) = rng.normal() * cfg.vel_scale;
    }
  if (cfg.zero_momentum) v0.rowwise() -= v0.colwise().mean();

  Vec rest(undirected.size());
  for (size_t e = 0; e < undirected.size(); ++e)
    rest[e] = cfg.rest_length > 0.0
                  ? cfg.rest_length
                  : (x0.row(undirected[e].first) - x0.row(undirected[e].second))
                        .norm();

  Trajectory traj;
  traj.frames = simulate_springs(x0, v0, undirected, rest, cfg.stiffness,
                                 cfg.damping, cfg.dt, cfg.n_steps);
  traj.skeleton.features = Mat::Ones(cfg.n_nodes, 1);
  traj.skeleton.coords = traj.frames.front();
  traj.skeleton.edges = edges;
  traj.validate();
  return traj;
}

}  // namespace equifuse
