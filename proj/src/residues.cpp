#include "equifuse/residues.hpp"

#include <cmath>

namespace equifuse {

namespace {

// Canonical backbone template (arbitrary length units, non-planar).
Mat43 backbone_template() {
  Mat43 t;
  t << 0.0, 0.0, 0.0,   // N
      1.5, 0.0, 0.0,    // CA
      2.4, 1.2, 0.0,    // C
      3.6, 1.3, 0.4;    // O
  return t;
}

}  // namespace

std::vector<ResidueStructure> gen_residue_system(
    const ResidueSystemConfig& cfg) {
  if (cfg.n_residues < 1)
    throw ContractError("gen_residue_system: need at least one residue");
  const Mat43 tmpl = backbone_template();
  const RowVec3 tmpl_center = tmpl.colwise().mean();

  std::vector<ResidueStructure> out;
  out.reserve(cfg.n_samples);
  for (int s = 0; s < cfg.n_samples; ++s) {
    Rng rng(split_seed(cfg.seed, 100 + static_cast<std::uint64_t>(s)));
    ResidueStructure rs;
    for (int i = 0; i < cfg.n_residues; ++i) {
      const int cat = static_cast<int>(rng.integer(kNumResidueCategories));
      rs.categories.push_back(cat);
      const double scale = 1.0 + cfg.category_scale * cat;
      RowVec3 center;
      center << cfg.chain_spacing * i, 0.8 * std::sin(0.9 * i),
          0.8 * std::cos(0.9 * i);
      Mat43 atoms;
      for (int a = 0; a < kAtomsPerResidue; ++a)
        atoms.row(a) = center + scale * (tmpl.row(a) - tmpl_center);
      rs.backbone.push_back(atoms);
    }
    TransformE3 tf = TransformE3::random(rng, /*reflect=*/false, 3.0);
    rs = apply_transform(rs, tf);
    rs.validate();
    out.push_back(std::move(rs));
  }
  return out;
}

ResidueGraph residue_to_graph(const ResidueStructure& rs) {
  rs.validate();
  const int n_res = rs.n_residues();
  const int n_atoms = n_res * kAtomsPerResidue;

  ResidueGraph rg;
  rg.n_residues = n_res;
  rg.graph.features = Mat(n_atoms, kResidueFeatureWidth);
  rg.graph.coords = MatX3(n_atoms, 3);
  rg.residue_of.resize(n_atoms);
  for (int i = 0; i < n_res; ++i) {
    for (int a = 0; a < kAtomsPerResidue; ++a) {
      const int node = i * kAtomsPerResidue + a;
      rg.graph.coords.row(node) = rs.backbone[i].row(a);
      rg.graph.features(node, 0) = 1.0;
      rg.graph.features(node, 1) = (i + 0.5) / n_res;
      rg.residue_of[node] = i;
    }
  }
  auto add_both = [&rg](int a, int b) {
    rg.graph.edges.emplace_back(a, b);
    rg.graph.edges.emplace_back(b, a);
  };
  for (int i = 0; i < n_res; ++i) {
    const int base = i * kAtomsPerResidue;
    for (int a = 0; a < kAtomsPerResidue; ++a)
      for (int b = a + 1; b < kAtomsPerResidue; ++b)
        add_both(base + a, base + b);
    if (i + 1 < n_res) {
      const int next = (i + 1) * kAtomsPerResidue;
      add_both(base + 2, next + 0);  // peptide bond C(i) - N(i+1)
      add_both(base + 1, next + 1);  // CA(i) - CA(i+1)
    }
  }
  rg.graph.validate();
  return rg;
}

}  // namespace equifuse
