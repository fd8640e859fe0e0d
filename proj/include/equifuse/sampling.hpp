#pragma once

#include "equifuse/geometry.hpp"

namespace equifuse {

// One training window: `input` frames feed the model, `target` frames are
// the ground truth to predict.
struct Window {
  int start = 0;
  std::vector<MatX3> input;
  std::vector<MatX3> target;
};

// The 2xT protocol: pick a random start s, take T frames as input and the
// next T as target. Deterministic given the seed; requires length >= 2T.
std::vector<Window> sample_windows(const Trajectory& traj, int t_in, int count,
                                   std::uint64_t seed);

// Generalization with a separate prediction horizon (input T, target F).
std::vector<Window> sample_windows(const Trajectory& traj, int t_in, int f_out,
                                   int count, std::uint64_t seed);

}  // namespace equifuse
