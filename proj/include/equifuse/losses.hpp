#pragma once

#include <map>
#include <string>

#include "equifuse/autodiff.hpp"
#include "equifuse/geometry.hpp"

namespace equifuse {

// (1/(F*N*3)) sum (pred - target)^2, i.e. the mean over frames of the
// per-frame mean squared coordinate error.
Tensor mse_loss(const std::vector<Tensor>& pred_frames,
                const std::vector<MatX3>& target_frames);
// Plain-data version for metrics.
double mse_value(const std::vector<MatX3>& pred_frames,
                 const std::vector<MatX3>& target_frames);
double mse_value_frame(const MatX3& pred, const MatX3& target);

// Elementwise Huber (0.5 r^2 inside delta, linear outside), averaged over
// all elements. Declared in autodiff.hpp; re-exported here as the task op.
using equifuse::huber_loss;

// Mean over rows of -log softmax(logits)[target], max-subtracted.
using equifuse::cross_entropy_loss;

struct LossReport {
  double total = 0.0;
  std::map<std::string, double> components;
};

struct DesignLoss {
  Tensor total;  // ce + lambda * huber, on the tape
  LossReport report;
};

// Sequence-design objective: cross entropy over categories plus
// lambda * Huber on the backbone coordinates.
DesignLoss design_loss(const Tensor& logits, const Tensor& backbone_pred,
                       const ResidueStructure& gt, double lambda, double delta);

// Fraction of positions where prediction equals ground truth.
double compute_aar(const std::vector<int>& pred, const std::vector<int>& gt);

// Argmax per row; ties resolved to the lowest index.
std::vector<int> argmax_categories(const Mat& scores);

// sqrt of the mean squared per-atom deviation, in the shared frame
// (no superposition). Inputs are (4N) x 3 stacked backbones.
double compute_rmsd(const Mat& pred, const Mat& gt);

// Stacks per-residue backbones into a (4N) x 3 matrix.
Mat stack_backbone(const ResidueStructure& rs);

}  // namespace equifuse
