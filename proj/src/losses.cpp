#include "equifuse/losses.hpp"

#include <cmath>

namespace equifuse {

Tensor mse_loss(const std::vector<Tensor>& pred_frames,
                const std::vector<MatX3>& target_frames) {
  if (pred_frames.empty() || pred_frames.size() != target_frames.size())
    throw DimensionError("mse_loss: " + std::to_string(pred_frames.size()) +
                         " predicted frames vs " +
                         std::to_string(target_frames.size()) + " targets");
  std::vector<Tensor> diffs;
  diffs.reserve(pred_frames.size());
  for (size_t f = 0; f < pred_frames.size(); ++f) {
    const Tensor& p = pred_frames[f];
    const MatX3& t = target_frames[f];
    if (p.rows() != t.rows() || p.cols() != 3)
      throw DimensionError("mse_loss: frame " + std::to_string(f) + " shape " +
                           shape_str(p.shape()) + " vs [" +
                           std::to_string(t.rows()) + "x3]");
    diffs.push_back(sub(p, Tensor::from_matrix(t)));
  }
  Tensor d = vstack(diffs);
  return mean(mul(d, d));
}

double mse_value_frame(const MatX3& pred, const MatX3& target) {
  if (pred.rows() != target.rows())
    throw DimensionError("mse: frame row mismatch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double mse_value(const std::vector<MatX3>& pred_frames,
                 const std::vector<MatX3>& target_frames) {
  if (pred_frames.empty() || pred_frames.size() != target_frames.size())
    throw DimensionError("mse: frame count mismatch");
  double acc = 0.0;
  for (size_t f = 0; f < pred_frames.size(); ++f)
    acc += mse_value_frame(pred_frames[f], target_frames[f]);
  return acc / static_cast<double>(pred_frames.size());
}

DesignLoss design_loss(const Tensor& logits, const Tensor& backbone_pred,
                       const ResidueStructure& gt, double lambda,
                       double delta) {
  gt.validate();
  if (logits.rows() != gt.n_residues())
    throw DimensionError("design_loss: " + shape_str(logits.shape()) +
                         " logits for " + std::to_string(gt.n_residues()) +
                         " residues");
  Tensor ce = cross_entropy_loss(logits, gt.categories);
  Tensor hub = huber_loss(backbone_pred, stack_backbone(gt), delta);
  DesignLoss out;
  out.total = add(ce, scale(hub, lambda));
  out.report.components["ce"] = ce.item();
  out.report.components["huber"] = hub.item();
  out.report.total = out.total.item();
  return out;
}

double compute_aar(const std::vector<int>& pred, const std::vector<int>& gt) {
  if (pred.size() != gt.size())
    throw ContractError("aar: length mismatch " + std::to_string(pred.size()) +
                        " vs " + std::to_string(gt.size()));
  if (pred.empty()) throw ContractError("aar: empty sequences");
  int hits = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gt[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<int> argmax_categories(const Mat& scores) {
  std::vector<int> out(scores.rows());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = static_cast<int>(c);
    out[r] = best;
  }
  return out;
}

double compute_rmsd(const Mat& pred, const Mat& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != 3 || gt.cols() != 3)
    throw DimensionError("rmsd: [" + std::to_string(pred.rows()) + "x" +
                         std::to_string(pred.cols()) + "] vs [" +
                         std::to_string(gt.rows()) + "x" +
                         std::to_string(gt.cols()) + "]");
  double acc = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    acc += (pred.row(r) - gt.row(r)).squaredNorm();
  return std::sqrt(acc / static_cast<double>(pred.rows()));
}

Mat stack_backbone(const ResidueStructure& rs) {
  Mat out(rs.n_residues() * kAtomsPerResidue, 3);
  for (int i = 0; i < rs.n_residues(); ++i)
    out.middleRows(i * kAtomsPerResidue, kAtomsPerResidue) = rs.backbone[i];
  return out;
}

}  // namespace equifuse
