#include <doctest.h>

#include "equifuse/autodiff.hpp"
#include "equifuse/mlp.hpp"
#include "helpers.hpp"

using namespace equifuse;
using testutil::random_matrix;
using testutil::to_grid;
using testutil::to_oracle;

TEST_CASE("affine: identity composition") {
  Tensor x = Tensor::from_matrix(Mat::Identity(2, 2));
  Tensor w = Tensor::from_matrix(Mat::Identity(2, 2));
  Tensor b = Tensor::zeros({2});
  Tensor y = affine(x, w, b);
  CHECK(testutil::max_abs_diff(y.value_matrix(), Mat(Mat::Identity(2, 2))) == 0.0);
}

TEST_CASE("affine: 1 + 2 + 3 = 6") {
  Mat x(1, 2);
  x << 1, 2;
  Mat w(2, 1);
  w << 1, 1;
  Vec b(1);
  b << 3;
  Tensor y = affine(Tensor::from_matrix(x), Tensor::from_matrix(w),
                    Tensor::from_vector(b));
  CHECK(y.item() == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("affine: random case matches the triple-loop oracle") {
  Rng rng(42);
  Mat x = random_matrix(3, 4, rng);
  Mat w = random_matrix(4, 2, rng);
  Vec b(2);
  b << rng.normal(), rng.normal();
  Tensor y = affine(Tensor::from_matrix(x), Tensor::from_matrix(w),
                    Tensor::from_vector(b));
  oracle::Grid expect =
      oracle::affine(to_grid(x), to_grid(w), {b[0], b[1]});
  CHECK(testutil::max_abs_diff(y.value_matrix(), expect) <= 1e-12);
}

TEST_CASE("affine: shape mismatch names both shapes") {
  Tensor x = Tensor::from_matrix(Mat::Zero(2, 3));
  Tensor w = Tensor::from_matrix(Mat::Zero(4, 2));
  Tensor b = Tensor::zeros({2});
  CHECK_THROWS_WITH_AS(affine(x, w, b),
                       doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("mlp: single identity layer is the identity") {
  Rng rng(1);
  Mlp net = Mlp::create({3, 3}, rng);
  net.weights[0].value_mut() =
      Eigen::Map<const Vec>(Mat(Mat::Identity(3, 3)).data(), 9);
  Mat x = random_matrix(4, 3, rng);
  Tensor y = net.forward(Tensor::from_matrix(x));
  CHECK(testutil::max_abs_diff(y.value_matrix(), x) == 0.0);
}

TEST_CASE("mlp: zero input with zero biases stays zero") {
  Rng rng(2);
  Mlp net = Mlp::create({3, 5, 2}, rng);
  Tensor y = net.forward(Tensor::from_matrix(Mat::Zero(4, 3)));
  CHECK(y.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp: 2-layer net matches the scalar-loop composition oracle") {
  Rng rng(3);
  Mlp net = Mlp::create({3, 6, 2}, rng);
  Mat x = random_matrix(5, 3, rng);
  Tensor y = net.forward(Tensor::from_matrix(x));
  oracle::Grid expect = oracle::mlp(to_grid(x), to_oracle(net));
  CHECK(testutil::max_abs_diff(y.value_matrix(), expect) <= 1e-12);
}

TEST_CASE("mlp: empty layer list is a configuration error") {
  Rng rng(4);
  CHECK_THROWS_AS(Mlp::create({7}, rng), ConfigError);
}

TEST_CASE("backward: sum gives all-ones gradient") {
  Tensor x = Tensor::from_matrix(Mat::Random(3, 4), /*requires_grad=*/true);
  backward(sum(x));
  CHECK((x.grad().array() == 1.0).all());
}

TEST_CASE("backward: squared norm gives 2x") {
  Rng rng(5);
  Mat xv = random_matrix(2, 3, rng);
  Tensor x = Tensor::from_matrix(xv, true);
  backward(sum(mul(x, x)));
  Mat g = Eigen::Map<const Mat>(x.grad().data(), 2, 3);
  CHECK(testutil::max_abs_diff(g, Mat(2.0 * xv)) <= 1e-14);
}

TEST_CASE("backward: rejects non-scalar loss") {
  Tensor x = Tensor::from_matrix(Mat::Zero(2, 2), true);
  CHECK_THROWS_AS(backward(add(x, x)), ContractError);
}

TEST_CASE("backward: gradients accumulate until zero_grad") {
  Tensor x = Tensor::from_matrix(Mat::Ones(2, 2), true);
  backward(sum(x));
  backward(sum(x));
  CHECK((x.grad().array() == 2.0).all());
  x.zero_grad();
  backward(sum(x));
  CHECK((x.grad().array() == 1.0).all());
}

TEST_CASE("finite_diff_check: quadratic at theta = 3") {
  Vec v(1);
  v << 3.0;
  Tensor theta = Tensor::from_vector(v, true);
  auto run = [&theta]() {
    return mul(theta, theta);
  };
  backward(run());
  CHECK(theta.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
  double err = finite_diff_check([&]() { return run().item(); }, theta, 1e-6);
  CHECK(err <= 1e-9);
}

TEST_CASE("finite_diff_check: central differences are exact on affine maps") {
  Rng rng(6);
  Mat w = random_matrix(3, 1, rng);
  Tensor theta = Tensor::from_matrix(random_matrix(1, 3, rng), true);
  Tensor wt = Tensor::from_matrix(w);
  auto run = [&]() { return sum(matmul(theta, wt)); };
  backward(run());
  // central differences are exact for affine maps at any h; a wider step
  // keeps the subtraction noise below the tolerance
  double err = finite_diff_check([&]() { return run().item(); }, theta, 1e-3);
  CHECK(err <= 1e-10);
}

// Per-op gradient checks against central differences on random instances.
TEST_CASE("gradients: every differentiable op passes finite differences") {
  Rng rng(7);
  Tensor a = Tensor::from_matrix(random_matrix(3, 4, rng), true);
  Tensor b = Tensor::from_matrix(random_matrix(3, 4, rng), true);
  Tensor w = Tensor::from_matrix(random_matrix(4, 3, rng), true);
  Tensor bias = Tensor::from_vector(Vec::Random(4), true);
  Tensor gain = Tensor::from_vector(Vec::Ones(4) + 0.1 * Vec::Random(4), true);
  Mat target = random_matrix(3, 4, rng);
  std::vector<int> idx = {2, 0, 1, 2, 1};
  std::vector<int> classes = {1, 2, 0};

  auto check = [&](auto&& build, Tensor& param) {
    for (Tensor* t : {&a, &b, &w, &bias, &gain}) t->zero_grad();
    Tensor loss = build();
    backward(loss);
    double err =
        finite_diff_check([&]() { return build().item(); }, param, 1e-6);
    CAPTURE(err);
    CHECK(err <= 1e-5);
  };

  check([&]() { return mean(mul(add(a, b), sub(a, b))); }, a);
  check([&]() { return mean(matmul(a, w)); }, w);
  check([&]() { return mean(transpose(matmul(a, w))); }, a);
  check([&]() { return mean(add_rowvec(a, bias)); }, bias);
  check([&]() { return mean(silu(matmul(a, w))); }, a);
  check([&]() { return mean(gather_rows(a, idx)); }, a);
  check([&]() { return mean(scatter_rows(gather_rows(a, idx), idx, 3)); }, a);
  check([&]() { return mean(vstack({a, b})); }, b);
  check([&]() { return mean(hstack({a, scale(b, 2.0)})); }, b);
  check([&]() { return mean(rows_slice(a, 1, 2)); }, a);
  check([&]() { return mean(cols_slice(a, 1, 3)); }, a);
  check([&]() { return mean(row_norm(a)); }, a);
  check([&]() { return mean(scale_rows(a, row_norm(b))); }, b);
  // weight the softmax entries: the plain mean of softmax rows is constant
  check([&]() { return mean(matmul(softmax_rows(a), w)); }, a);
  check([&]() { return mean(layer_norm(a, gain, bias)); }, a);
  check([&]() { return mean(layer_norm(a, gain, bias)); }, gain);
  check([&]() { return huber_loss(a, target, 0.7); }, a);
  check([&]() { return cross_entropy_loss(matmul(a, w), classes); }, a);
}

TEST_CASE("values stay finite through sanctioned ops on finite inputs") {
  Rng rng(8);
  Tensor a = Tensor::from_matrix(random_matrix(6, 6, rng, 30.0), true);
  Tensor out = softmax_rows(a);
  CHECK(out.value().allFinite());
  Tensor g = Tensor::from_vector(Vec::Ones(6), true);
  Tensor z = Tensor::from_vector(Vec::Zero(6), true);
  CHECK(layer_norm(a, g, z).value().allFinite());
  CHECK(silu(scale(a, 50.0)).value().allFinite());
}
