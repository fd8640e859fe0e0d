#include "equifuse/sampling.hpp"

namespace equifuse {

std::vector<Window> sample_windows(const Trajectory& traj, int t_in, int f_out,
                                   int count, std::uint64_t seed) {
  if (t_in < 1 || f_out < 1)
    throw ContractError("sample_windows: window lengths must be positive");
  const int total = traj.n_frames();
  const int span = t_in + f_out;
  if (total < span)
    throw DataError("sample_windows: trajectory of " + std::to_string(total) +
                    " frames is too short for a " + std::to_string(span) +
                    "-frame window");
  Rng rng(seed);
  std::vector<Window> out;
  out.reserve(count);
  const int max_start = total - span;  // inclusive
  for (int k = 0; k < count; ++k) {
    Window w;
    w.start = static_cast<int>(rng.integer(static_cast<std::uint64_t>(max_start) + 1));
    for (int t = 0; t < t_in; ++t) w.input.push_back(traj.frames[w.start + t]);
    for (int t = 0; t < f_out; ++t)
      w.target.push_back(traj.frames[w.start + t_in + t]);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> sample_windows(const Trajectory& traj, int t_in, int count,
                                   std::uint64_t seed) {
  return sample_windows(traj, t_in, t_in, count, seed);
}

}  // namespace equifuse
