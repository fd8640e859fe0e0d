#include <doctest.h>

#include "equifuse/losses.hpp"
#include "equifuse/residues.hpp"
#include "helpers.hpp"

using namespace equifuse;
using testutil::random_matrix;
using testutil::to_grid;

namespace {

std::vector<double> flat(const Mat& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

TEST_CASE("mse_loss: zero for identical frames, one for unit offset") {
  Rng rng(100);
  std::vector<MatX3> target = {testutil::random_coords(3, rng),
                               testutil::random_coords(3, rng)};
  std::vector<Tensor> same = {Tensor::from_matrix(Mat(target[0])),
                              Tensor::from_matrix(Mat(target[1]))};
  CHECK(mse_loss(same, target).item() == 0.0);

  std::vector<Tensor> off;
  for (const MatX3& f : target)
    off.push_back(Tensor::from_matrix(Mat(f.array() + 1.0)));
  CHECK(mse_loss(off, target).item() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mse_loss: random 2x3x3 case matches the scalar oracle") {
  Rng rng(101);
  std::vector<MatX3> target = {testutil::random_coords(3, rng),
                               testutil::random_coords(3, rng)};
  std::vector<MatX3> pred = {testutil::random_coords(3, rng),
                             testutil::random_coords(3, rng)};
  std::vector<Tensor> pt = {Tensor::from_matrix(Mat(pred[0])),
                            Tensor::from_matrix(Mat(pred[1]))};
  Mat pall(6, 3), tall(6, 3);
  pall << pred[0], pred[1];
  tall << target[0], target[1];
  const double expect = oracle::mse(flat(pall), flat(tall));
  CHECK(mse_loss(pt, target).item() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(mse_value(pred, target) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mse_loss: shape mismatch is a dimension error") {
  Rng rng(102);
  std::vector<MatX3> target = {testutil::random_coords(3, rng)};
  std::vector<Tensor> pred = {Tensor::from_matrix(Mat(Mat::Zero(4, 3)))};
  CHECK_THROWS_AS(mse_loss(pred, target), DimensionError);
}

TEST_CASE("huber: quadratic branch 0.5 * 0.25 at r = 0.5") {
  Mat target = Mat::Zero(1, 1);
  Tensor pred = Tensor::from_matrix(Mat(Mat::Constant(1, 1, 0.5)));
  CHECK(huber_loss(pred, target, 1.0).item() ==
        doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("huber: linear branch delta * (|r| - delta/2) at r = 2") {
  Mat target = Mat::Zero(1, 1);
  Tensor pred = Tensor::from_matrix(Mat(Mat::Constant(1, 1, 2.0)));
  CHECK(huber_loss(pred, target, 1.0).item() ==
        doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("huber: mixed residuals match the piecewise scalar oracle") {
  Rng rng(103);
  Mat target = random_matrix(4, 5, rng);
  Mat pred = target + random_matrix(4, 5, rng, 1.3);
  const double delta = 0.8;
  const double expect = oracle::huber(flat(pred), flat(target), delta);
  CHECK(huber_loss(Tensor::from_matrix(pred), target, delta).item() ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("huber: non-positive delta is a configuration error") {
  Mat t = Mat::Zero(1, 1);
  CHECK_THROWS_AS(huber_loss(Tensor::from_matrix(t), t, 0.0), ConfigError);
}

TEST_CASE("huber: continuously differentiable at the branch point") {
  const double delta = 1.0;
  Mat target = Mat::Zero(1, 1);
  auto slope_at = [&](double r) {
    Tensor pred = Tensor::from_matrix(Mat(Mat::Constant(1, 1, r)), true);
    backward(huber_loss(pred, target, delta));
    return pred.grad()[0];
  };
  const double h = 1e-7;
  CHECK(std::abs(slope_at(delta - h) - slope_at(delta + h)) <= 1e-6);
}

TEST_CASE("cross_entropy: uniform logits give ln(20), shift-invariant") {
  Mat logits = Mat::Zero(6, 20);
  CHECK(cross_entropy_loss(Tensor::from_matrix(logits),
                           std::vector<int>(6, 3))
            .item() == doctest::Approx(std::log(20.0)).epsilon(1e-10));
  Mat shifted = logits.array() + 123.0;
  CHECK(cross_entropy_loss(Tensor::from_matrix(shifted),
                           std::vector<int>(6, 3))
            .item() == doctest::Approx(std::log(20.0)).epsilon(1e-10));
}

TEST_CASE("cross_entropy: saturated logit on the target vanishes") {
  Mat logits = Mat::Zero(2, 20);
  logits(0, 4) = 1000.0;
  logits(1, 9) = 1000.0;
  CHECK(cross_entropy_loss(Tensor::from_matrix(logits), {4, 9}).item() <= 1e-6);
}

TEST_CASE("cross_entropy: random 5x20 case matches the direct formula") {
  Rng rng(104);
  Mat logits = random_matrix(5, 20, rng);
  std::vector<int> targets = {3, 19, 0, 7, 11};
  const double expect = oracle::cross_entropy(to_grid(logits), targets);
  CHECK(cross_entropy_loss(Tensor::from_matrix(logits), targets).item() ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("cross_entropy: invalid index is a contract error") {
  Mat logits = Mat::Zero(2, 20);
  CHECK_THROWS_AS(cross_entropy_loss(Tensor::from_matrix(logits), {0, 20}),
                  ContractError);
}

TEST_CASE("design_loss: perfect saturated prediction is zero") {
  ResidueSystemConfig cfg;
  cfg.n_samples = 1;
  cfg.n_residues = 4;
  cfg.seed = 7;
  ResidueStructure rs = gen_residue_system(cfg)[0];
  Mat logits = Mat::Zero(4, 20);
  for (int i = 0; i < 4; ++i) logits(i, rs.categories[i]) = 1000.0;
  Tensor backbone = Tensor::from_matrix(stack_backbone(rs));
  DesignLoss loss =
      design_loss(Tensor::from_matrix(logits), backbone, rs, 1.0, 1.0);
  CHECK(loss.report.total <= 1e-6);
  CHECK(loss.report.components.at("huber") == 0.0);
}

TEST_CASE("design_loss: lambda = 0 reduces to the CE component") {
  ResidueSystemConfig cfg;
  cfg.n_samples = 1;
  cfg.n_residues = 5;
  cfg.seed = 8;
  ResidueStructure rs = gen_residue_system(cfg)[0];
  Rng rng(105);
  Mat logits = random_matrix(5, 20, rng);
  Tensor backbone = Tensor::from_matrix(Mat(stack_backbone(rs).array() + 0.3));
  DesignLoss loss =
      design_loss(Tensor::from_matrix(logits), backbone, rs, 0.0, 1.0);
  CHECK(loss.report.total ==
        doctest::Approx(loss.report.components.at("ce")).epsilon(1e-15));
}

TEST_CASE("design_loss: total = ce + lambda * huber on constructed values") {
  // constructed inputs give ce = ln(20) and a huber component we can compute
  ResidueSystemConfig cfg;
  cfg.n_samples = 1;
  cfg.n_residues = 4;
  cfg.seed = 9;
  ResidueStructure rs = gen_residue_system(cfg)[0];
  Mat logits = Mat::Zero(4, 20);
  // uniform offset 0.5 within delta = 1: huber = 0.5 * 0.25 = 0.125
  Tensor backbone =
      Tensor::from_matrix(Mat(stack_backbone(rs).array() + 0.5));
  DesignLoss loss =
      design_loss(Tensor::from_matrix(logits), backbone, rs, 2.0, 1.0);
  CHECK(loss.report.components.at("ce") ==
        doctest::Approx(std::log(20.0)).epsilon(1e-12));
  CHECK(loss.report.components.at("huber") ==
        doctest::Approx(0.125).epsilon(1e-12));
  CHECK(loss.report.total ==
        doctest::Approx(std::log(20.0) + 2.0 * 0.125).epsilon(1e-12));
}

TEST_CASE("compute_aar: identical, disjoint, and 6-of-8 sequences") {
  std::vector<int> a = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(compute_aar(a, a) == 1.0);
  std::vector<int> b = {2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(compute_aar(a, b) == 0.0);
  std::vector<int> c = a;
  c[2] = 0;
  c[5] = 0;
  CHECK(compute_aar(a, c) == 0.75);
  CHECK_THROWS_AS(compute_aar(a, {1, 2}), ContractError);
}

TEST_CASE("compute_aar: invariant under a shared permutation") {
  Rng rng(106);
  std::vector<int> a, b;
  for (int i = 0; i < 12; ++i) {
    a.push_back(static_cast<int>(rng.integer(20)));
    b.push_back(static_cast<int>(rng.integer(20)));
  }
  const double base = compute_aar(a, b);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<int> pa(12), pb(12);
  for (int i = 0; i < 12; ++i) {
    pa[perm[i]] = a[i];
    pb[perm[i]] = b[i];
  }
  CHECK(compute_aar(pa, pb) == base);
}

TEST_CASE("argmax ties break to the lowest index") {
  Mat scores(2, 4);
  scores << 0.2, 0.5, 0.5, 0.1, 1.0, 1.0, 1.0, 1.0;
  auto picks = argmax_categories(scores);
  CHECK(picks[0] == 1);
  CHECK(picks[1] == 0);
}

TEST_CASE("compute_rmsd: zero, rigid shift, and the scalar oracle") {
  Rng rng(107);
  Mat gt = random_matrix(8, 3, rng);
  CHECK(compute_rmsd(gt, gt) == 0.0);

  RowVec3 shift;
  shift << 2, 3, 6;  // length 7
  Mat moved = gt;
  moved.rowwise() += shift;
  CHECK(compute_rmsd(moved, gt) == doctest::Approx(7.0).epsilon(1e-12));

  Mat pred = gt + random_matrix(8, 3, rng);
  CHECK(compute_rmsd(pred, gt) ==
        doctest::Approx(oracle::rmsd(to_grid(pred), to_grid(gt))).epsilon(1e-12));
}

TEST_CASE("losses: analytic gradients pass finite differences") {
  Rng rng(108);
  auto fd = [](auto&& build, Tensor& param) {
    param.zero_grad();
    backward(build());
    return finite_diff_check([&]() { return build().item(); }, param, 1e-6);
  };

  std::vector<MatX3> target = {testutil::random_coords(3, rng)};
  Tensor pred = Tensor::from_matrix(Mat(testutil::random_coords(3, rng)), true);
  CHECK(fd([&]() { return mse_loss({pred}, target); }, pred) <= 1e-5);

  Mat ht = random_matrix(3, 4, rng);
  Tensor hp = Tensor::from_matrix(Mat(ht + random_matrix(3, 4, rng)), true);
  CHECK(fd([&]() { return huber_loss(hp, ht, 0.9); }, hp) <= 1e-5);

  Tensor logits = Tensor::from_matrix(random_matrix(4, 20, rng), true);
  std::vector<int> cls = {0, 5, 19, 7};
  CHECK(fd([&]() { return cross_entropy_loss(logits, cls); }, logits) <= 1e-5);
}
