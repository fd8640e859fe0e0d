#pragma once

#include "equifuse/geometry.hpp"

namespace equifuse {

struct ResidueSystemConfig {
  int n_samples = 16;
  int n_residues = 8;
  // Intra-residue geometry is scaled by (1 + category_scale * category),
  // so the backbone shape encodes the category.
  double category_scale = 0.08;
  double chain_spacing = 4.0;
  std::uint64_t seed = 0;
};

// Synthetic residue structures: random categories, a canonical 4-atom
// backbone template scaled per category, residues laid out along a chain,
// and a random rigid transform per sample. Deterministic given the seed.
std::vector<ResidueStructure> gen_residue_system(const ResidueSystemConfig& cfg);

// Atom-level graph of a residue structure: each residue contributes its 4
// backbone atoms as nodes sharing one feature row. Edges: all intra-residue
// pairs plus sequential inter-residue links, both directions.
struct ResidueGraph {
  GeometricGraph graph;
  int n_residues = 0;
  // residue_of[node] maps an atom node back to its residue.
  std::vector<int> residue_of;
};

ResidueGraph residue_to_graph(const ResidueStructure& rs);

// Feature width used by residue_to_graph.
inline constexpr int kResidueFeatureWidth = 2;

}  // namespace equifuse
