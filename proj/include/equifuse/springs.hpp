#pragma once

#include "equifuse/geometry.hpp"

namespace equifuse {

struct SpringSystemConfig {
  int n_nodes = 5;
  int n_steps = 64;  // frames in the trajectory, including the initial one
  double dt = 0.1;
  double stiffness = 2.0;
  // Per-node viscous drag. With zero total momentum (see zero_momentum)
  // drag leaves the momentum sum at zero, so conservation still holds.
  double damping = 1.0;
  double mean_degree = 4.0;
  double pos_scale = 1.0;
  double vel_scale = 0.3;
  // Shared rest length for every spring. Random initial positions leave
  // edges stretched or compressed relative to it, so systems relax and the
  // displacement field is a function of current distances. Zero selects
  // per-edge rest lengths equal to the initial distances (equilibrium start).
  double rest_length = 1.5;
  // Remove the mean initial velocity so the center of mass stays put.
  bool zero_momentum = true;
  std::uint64_t seed = 0;
};

// Symplectic-Euler integration of a pairwise spring network on a random
// connected graph. Rest lengths are the initial edge lengths; the spring
// edges become the trajectory's edge set. Deterministic given the seed.
// Throws DataError when a coordinate exceeds 1e6 (suggesting a smaller dt).
Trajectory gen_spring_system(const SpringSystemConfig& cfg);

// Integrator behind gen_spring_system, exposed for direct testing.
// `undirected` lists each spring once; `rest_lengths` aligns with it.
std::vector<MatX3> simulate_springs(
    const MatX3& x0, const MatX3& v0,
    const std::vector<std::pair<int, int>>& undirected,
    const Vec& rest_lengths, double stiffness, double damping, double dt,
    int n_frames);

}  // namespace equifuse
