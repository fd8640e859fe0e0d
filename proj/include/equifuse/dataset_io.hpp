#pragma once

#include <string>
#include <vector>

#include "equifuse/geometry.hpp"

namespace equifuse {

// Line-delimited JSON datasets. The first line is a header object naming
// the record kind; each following line is one record.
//
// Trajectory records (.traj.jsonl): n_nodes, features (N x c),
// edges (list of [i, j]), frames (T x N x 3).
// Residue records (.res.jsonl): categories, backbone (N x 4 x 3).
//
// Doubles round-trip exactly (shortest-representation formatting).
void save_trajectories(const std::string& path,
                       const std::vector<Trajectory>& trajs);
std::vector<Trajectory> load_trajectories(const std::string& path);

void save_residues(const std::string& path,
                   const std::vector<ResidueStructure>& samples);
std::vector<ResidueStructure> load_residues(const std::string& path);

}  // namespace equifuse
