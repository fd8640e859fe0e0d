#pragma once

// Reverse-mode automatic differentiation over dense row-major tensors.
//
// Tape policy: the graph is rebuilt on every forward pass. Each op returns a
// fresh Tensor whose node stores the parent handles and a backward closure;
// backward(loss) walks the graph once in reverse topological order. Interior
// gradients live only as long as the forward graph; gradients of persistent
// leaves (parameters) accumulate across backward calls until zero_grad().

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "equifuse/types.hpp"

namespace equifuse {

using Shape = std::vector<Eigen::Index>;

Eigen::Index shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  Vec value;  // flattened row-major
  Vec grad;   // empty until backward touches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates this->grad into parents

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  void ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from_matrix(const Mat& m, bool requires_grad = false);
  static Tensor from_vector(const Vec& v, bool requires_grad = false);
  static Tensor scalar(Scalar v);
  static Tensor zeros(const Shape& shape, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  Eigen::Index size() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;
  bool requires_grad() const;

  const Vec& value() const;
  Mat value_matrix() const;  // rank-1 tensors come back as a single row
  Scalar item() const;       // requires size() == 1

  // Gradient buffer; ContractError when backward has not populated it.
  const Vec& grad() const;
  Vec& grad_mut();
  bool has_grad() const;
  void zero_grad();
  // Allocates a zero gradient buffer when none exists. Parameters with no
  // path to the loss have zero gradient by definition; this records that
  // explicitly so optimizers and checks can treat them uniformly.
  void materialize_zero_grad();

  // In-place value mutation, for optimizers and finite differences. The
  // caller owns consistency with anything already on a tape.
  Vec& value_mut();

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op(Shape shape, Vec value,
                        std::vector<Tensor> parents,
                        std::function<void(detail::Node&)> backprop);
};

// --- graph construction -----------------------------------------------------

Tensor make_op(Shape shape, Vec value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backprop);

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Scalar c);

// x: [n x d], b: [d] broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// out[i, j] = sum_k x[i, k] W[k, j] + b[j]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
// out: [n_rows x d]; out[idx[r]] += x[r]. Rows not indexed stay zero.
Tensor scatter_rows(const Tensor& x, const std::vector<int>& idx,
                    Eigen::Index n_rows);
Tensor vstack(const std::vector<Tensor>& parts);
Tensor hstack(const std::vector<Tensor>& parts);
Tensor rows_slice(const Tensor& x, Eigen::Index start, Eigen::Index len);
Tensor cols_slice(const Tensor& x, Eigen::Index start, Eigen::Index len);

// Euclidean norm of each row -> [n x 1]. Not differentiable at a zero row.
Tensor row_norm(const Tensor& x);
// out[r, c] = x[r, c] * s[r, 0]
Tensor scale_rows(const Tensor& x, const Tensor& s);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Scalar eps = 1e-5);

// Scalar losses (target is constant data, not on the tape).
Tensor huber_loss(const Tensor& pred, const Mat& target, Scalar delta);
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& targets);

// --- backward ---------------------------------------------------------------

// Populates grad on every requires_grad tensor reachable from `loss`.
// `loss` must be scalar (size 1). Leaf gradients accumulate.
void backward(const Tensor& loss);

// Central-difference gradient verification. `f` re-evaluates the scalar
// objective at the current value of `theta`; `theta.grad()` must already hold
// the analytic gradient. Returns
//   max_k |analytic_k - central_k| / max(1e-12, |central_k|).
double finite_diff_check(const std::function<double()>& f, Tensor& theta,
                         double h = 1e-6);

}  // namespace equifuse
