#include "equifuse/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace equifuse {

Eigen::Index shape_size(const Shape& s) {
  Eigen::Index n = 1;
  for (Eigen::Index d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

namespace detail {

Eigen::Index Node::rows() const {
  return shape.size() == 2 ? shape[0] : 1;
}

Eigen::Index Node::cols() const {
  if (shape.size() == 2) return shape[1];
  if (shape.size() == 1) return shape[0];
  return 1;
}

void Node::ensure_grad() {
  if (grad.size() == 0) grad = Vec::Zero(value.size());
}

}  // namespace detail

namespace {

using detail::Node;

using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

CMatMap val(const Node& n) { return {n.value.data(), n.rows(), n.cols()}; }
CMatMap gout(const Node& n) { return {n.grad.data(), n.rows(), n.cols()}; }
MatMap gmut(Node& n) { return {n.grad.data(), n.rows(), n.cols()}; }

void require_rank2(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor make_op(Shape shape, Vec value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const Tensor& p : parents) {
    node->parents.push_back(p.node());
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  if (node->requires_grad) node->backprop = std::move(backprop);
  return Tensor(std::move(node));
}

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::from_matrix(const Mat& m, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = {m.rows(), m.cols()};
  node->value = Eigen::Map<const Vec>(m.data(), m.size());
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_vector(const Vec& v, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = {v.size()};
  node->value = v;
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(Scalar v) {
  Vec d(1);
  d[0] = v;
  return from_vector(d, false);
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = Vec::Zero(shape_size(shape));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }
Eigen::Index Tensor::size() const { return node_->value.size(); }
Eigen::Index Tensor::rows() const { return node_->rows(); }
Eigen::Index Tensor::cols() const { return node_->cols(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const Vec& Tensor::value() const { return node_->value; }

Mat Tensor::value_matrix() const { return val(*node_); }

Scalar Tensor::item() const {
  if (size() != 1)
    throw ContractError("item: tensor " + shape_str(shape()) + " is not scalar");
  return node_->value[0];
}

const Vec& Tensor::grad() const {
  if (!has_grad())
    throw ContractError("grad: no gradient on tensor " + shape_str(shape()));
  return node_->grad;
}

Vec& Tensor::grad_mut() {
  if (!has_grad())
    throw ContractError("grad: no gradient on tensor " + shape_str(shape()));
  return node_->grad;
}

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->value.size() &&
         node_->value.size() > 0;
}

void Tensor::zero_grad() { node_->grad.resize(0); }

void Tensor::materialize_zero_grad() { node_->ensure_grad(); }

Vec& Tensor::value_mut() { return node_->value; }

// --- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto pa = a.node();
  auto pb = b.node();
  return make_op(a.shape(), a.value() + b.value(), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad;
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      pb->grad += self.grad;
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto pa = a.node();
  auto pb = b.node();
  return make_op(a.shape(), a.value() - b.value(), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad;
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      pb->grad -= self.grad;
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto pa = a.node();
  auto pb = b.node();
  Vec out = a.value().cwiseProduct(b.value());
  return make_op(a.shape(), std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad.cwiseProduct(pb->value);
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      pb->grad += self.grad.cwiseProduct(pa->value);
    }
  });
}

Tensor scale(const Tensor& a, Scalar c) {
  auto pa = a.node();
  return make_op(a.shape(), a.value() * c, {a}, [pa, c](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += c * self.grad;
    }
  });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  require_rank2(x, "add_rowvec");
  if (b.shape().size() != 1 || b.size() != x.cols())
    throw DimensionError("add_rowvec: bias " + shape_str(b.shape()) +
                         " does not match columns of " + shape_str(x.shape()));
  Mat out = val(*x.node());
  out.rowwise() += b.value().transpose();
  auto px = x.node();
  auto pb = b.node();
  return make_op(x.shape(), Eigen::Map<const Vec>(out.data(), out.size()),
                 {x, b}, [px, pb](Node& self) {
                   if (px->requires_grad) {
                     px->ensure_grad();
                     px->grad += self.grad;
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     pb->grad += gout(self).colwise().sum().transpose();
                   }
                 });
}

// --- linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_str(a.shape()) +
                         " incompatible with " + shape_str(b.shape()));
  Mat out = val(*a.node()) * val(*b.node());
  auto pa = a.node();
  auto pb = b.node();
  return make_op({a.rows(), b.cols()},
                 Eigen::Map<const Vec>(out.data(), out.size()), {a, b},
                 [pa, pb](Node& self) {
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     gmut(*pa) += gout(self) * val(*pb).transpose();
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     gmut(*pb) += val(*pa).transpose() * gout(self);
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Mat out = val(*a.node()).transpose();
  auto pa = a.node();
  return make_op({a.cols(), a.rows()},
                 Eigen::Map<const Vec>(out.data(), out.size()), {a},
                 [pa](Node& self) {
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     gmut(*pa) += gout(self).transpose();
                   }
                 });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(matmul(x, w), b);
}

// --- indexing ---------------------------------------------------------------

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  require_rank2(x, "gather_rows");
  const Eigen::Index d = x.cols();
  Mat out(static_cast<Eigen::Index>(idx.size()), d);
  auto xv = val(*x.node());
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= x.rows())
      throw ContractError("gather_rows: index " + std::to_string(idx[r]) +
                          " out of range for " + shape_str(x.shape()));
    out.row(static_cast<Eigen::Index>(r)) = xv.row(idx[r]);
  }
  auto px = x.node();
  return make_op({out.rows(), d}, Eigen::Map<const Vec>(out.data(), out.size()),
                 {x}, [px, idx](Node& self) {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   auto g = gout(self);
                   auto gx = gmut(*px);
                   for (size_t r = 0; r < idx.size(); ++r)
                     gx.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
                 });
}

Tensor scatter_rows(const Tensor& x, const std::vector<int>& idx,
                    Eigen::Index n_rows) {
  require_rank2(x, "scatter_rows");
  if (static_cast<Eigen::Index>(idx.size()) != x.rows())
    throw DimensionError("scatter_rows: " + std::to_string(idx.size()) +
                         " indices for " + shape_str(x.shape()));
  Mat out = Mat::Zero(n_rows, x.cols());
  auto xv = val(*x.node());
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n_rows)
      throw ContractError("scatter_rows: index " + std::to_string(idx[r]) +
                          " out of range for " + std::to_string(n_rows) +
                          " rows");
    out.row(idx[r]) += xv.row(static_cast<Eigen::Index>(r));
  }
  auto px = x.node();
  return make_op({n_rows, x.cols()},
                 Eigen::Map<const Vec>(out.data(), out.size()), {x},
                 [px, idx](Node& self) {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   auto g = gout(self);
                   auto gx = gmut(*px);
                   for (size_t r = 0; r < idx.size(); ++r)
                     gx.row(static_cast<Eigen::Index>(r)) += g.row(idx[r]);
                 });
}

Tensor vstack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("vstack: no tensors");
  Eigen::Index d = parts[0].cols();
  Eigen::Index n = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "vstack");
    if (p.cols() != d)
      throw DimensionError("vstack: column mismatch " + shape_str(p.shape()));
    n += p.rows();
  }
  Mat out(n, d);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    out.middleRows(at, p.rows()) = val(*p.node());
    at += p.rows();
  }
  std::vector<std::shared_ptr<Node>> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return make_op({n, d}, Eigen::Map<const Vec>(out.data(), out.size()), parts,
                 [nodes](Node& self) {
                   auto g = gout(self);
                   Eigen::Index at = 0;
                   for (const auto& p : nodes) {
                     Eigen::Index r = p->rows();
                     if (p->requires_grad) {
                       p->ensure_grad();
                       gmut(*p) += g.middleRows(at, r);
                     }
                     at += r;
                   }
                 });
}

Tensor hstack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("hstack: no tensors");
  Eigen::Index n = parts[0].rows();
  Eigen::Index d = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "hstack");
    if (p.rows() != n)
      throw DimensionError("hstack: row mismatch " + shape_str(p.shape()));
    d += p.cols();
  }
  Mat out(n, d);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    out.middleCols(at, p.cols()) = val(*p.node());
    at += p.cols();
  }
  std::vector<std::shared_ptr<Node>> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return make_op({n, d}, Eigen::Map<const Vec>(out.data(), out.size()), parts,
                 [nodes](Node& self) {
                   auto g = gout(self);
                   Eigen::Index at = 0;
                   for (const auto& p : nodes) {
                     Eigen::Index c = p->cols();
                     if (p->requires_grad) {
                       p->ensure_grad();
                       gmut(*p) += g.middleCols(at, c);
                     }
                     at += c;
                   }
                 });
}

Tensor rows_slice(const Tensor& x, Eigen::Index start, Eigen::Index len) {
  require_rank2(x, "rows_slice");
  if (start < 0 || len < 0 || start + len > x.rows())
    throw DimensionError("rows_slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         shape_str(x.shape()));
  Mat out = val(*x.node()).middleRows(start, len);
  auto px = x.node();
  return make_op({len, x.cols()},
                 Eigen::Map<const Vec>(out.data(), out.size()), {x},
                 [px, start, len](Node& self) {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   gmut(*px).middleRows(start, len) += gout(self);
                 });
}

Tensor cols_slice(const Tensor& x, Eigen::Index start, Eigen::Index len) {
  require_rank2(x, "cols_slice");
  if (start < 0 || len < 0 || start + len > x.cols())
    throw DimensionError("cols_slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         shape_str(x.shape()));
  Mat out = val(*x.node()).middleCols(start, len);
  auto px = x.node();
  return make_op({x.rows(), len},
                 Eigen::Map<const Vec>(out.data(), out.size()), {x},
                 [px, start, len](Node& self) {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   gmut(*px).middleCols(start, len) += gout(self);
                 });
}

// --- rowwise ----------------------------------------------------------------

Tensor row_norm(const Tensor& x) {
  require_rank2(x, "row_norm");
  auto xv = val(*x.node());
  Vec norms = xv.rowwise().norm();
  auto px = x.node();
  return make_op({x.rows(), 1}, norms, {x}, [px](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    auto xv = val(*px);
    auto gx = gmut(*px);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      double n = self.value[r];
      if (n > 0.0) gx.row(r) += (self.grad[r] / n) * xv.row(r);
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require_rank2(x, "scale_rows");
  if (s.shape().size() != 2 || s.cols() != 1 || s.rows() != x.rows())
    throw DimensionError("scale_rows: scale " + shape_str(s.shape()) +
                         " does not match rows of " + shape_str(x.shape()));
  Mat out = val(*x.node()).array().colwise() * s.value().array();
  auto px = x.node();
  auto ps = s.node();
  return make_op(x.shape(), Eigen::Map<const Vec>(out.data(), out.size()),
                 {x, s}, [px, ps](Node& self) {
                   auto g = gout(self);
                   if (px->requires_grad) {
                     px->ensure_grad();
                     gmut(*px).array() += g.array().colwise() * ps->value.array();
                   }
                   if (ps->requires_grad) {
                     ps->ensure_grad();
                     ps->grad += (g.array() * val(*px).array()).rowwise().sum().matrix();
                   }
                 });
}

// --- reductions & nonlinearities ---------------------------------------------

Tensor sum(const Tensor& x) {
  Vec out(1);
  out[0] = x.value().sum();
  auto px = x.node();
  return make_op({1}, out, {x}, [px](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    px->grad.array() += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.size());
  Vec out(1);
  out[0] = x.value().sum() * inv;
  auto px = x.node();
  return make_op({1}, out, {x}, [px, inv](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    px->grad.array() += self.grad[0] * inv;
  });
}

Tensor silu(const Tensor& x) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out[i] = x.value()[i] * sigmoid(x.value()[i]);
  auto px = x.node();
  return make_op(x.shape(), std::move(out), {x}, [px](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (Eigen::Index i = 0; i < px->value.size(); ++i) {
      double s = sigmoid(px->value[i]);
      px->grad[i] += self.grad[i] * (s + px->value[i] * s * (1.0 - s));
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank2(x, "softmax_rows");
  Mat out = val(*x.node());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
  auto px = x.node();
  return make_op(x.shape(), Eigen::Map<const Vec>(out.data(), out.size()), {x},
                 [px](Node& self) {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   auto y = val(self);
                   auto g = gout(self);
                   auto gx = gmut(*px);
                   for (Eigen::Index r = 0; r < y.rows(); ++r) {
                     double dot = g.row(r).dot(y.row(r));
                     gx.row(r).array() +=
                         y.row(r).array() * (g.row(r).array() - dot);
                   }
                 });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  Scalar eps) {
  require_rank2(x, "layer_norm");
  const Eigen::Index d = x.cols();
  if (gain.size() != d || bias.size() != d)
    throw DimensionError("layer_norm: gain/bias size does not match " +
                         shape_str(x.shape()));
  auto xv = val(*x.node());
  Mat xhat(x.rows(), d);
  Vec inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mu = xv.row(r).mean();
    double var = (xv.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std[r];
  }
  Mat out = (xhat.array().rowwise() * gain.value().transpose().array())
                .rowwise() +
            bias.value().transpose().array();
  auto px = x.node();
  auto pg = gain.node();
  auto pb = bias.node();
  return make_op(
      x.shape(), Eigen::Map<const Vec>(out.data(), out.size()),
      {x, gain, bias}, [px, pg, pb, xhat, inv_std](Node& self) {
        auto g = gout(self);
        if (pg->requires_grad) {
          pg->ensure_grad();
          pg->grad += (g.array() * xhat.array()).colwise().sum().matrix().transpose();
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          pb->grad += g.colwise().sum().transpose();
        }
        if (px->requires_grad) {
          px->ensure_grad();
          auto gx = gmut(*px);
          const auto gamma = pg->value.transpose().array();
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            Eigen::Array<Scalar, 1, Eigen::Dynamic> dxhat =
                g.row(r).array() * gamma;
            double m1 = dxhat.mean();
            double m2 = (dxhat * xhat.row(r).array()).mean();
            gx.row(r).array() +=
                inv_std[r] * (dxhat - m1 - xhat.row(r).array() * m2);
          }
        }
      });
}

// --- losses -----------------------------------------------------------------

Tensor huber_loss(const Tensor& pred, const Mat& target, Scalar delta) {
  if (delta <= 0.0)
    throw ConfigError("huber_loss: delta must be positive, got " +
                      std::to_string(delta));
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw DimensionError("huber_loss: " + shape_str(pred.shape()) + " vs [" +
                         std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()) + "]");
  Eigen::Map<const Vec> t(target.data(), target.size());
  Vec r = pred.value() - t;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    double a = std::abs(r[i]);
    acc += a <= delta ? 0.5 * r[i] * r[i] : delta * (a - 0.5 * delta);
  }
  Vec out(1);
  out[0] = acc / static_cast<double>(r.size());
  auto pp = pred.node();
  return make_op({1}, out, {pred}, [pp, r, delta](Node& self) {
    if (!pp->requires_grad) return;
    pp->ensure_grad();
    const double w = self.grad[0] / static_cast<double>(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      double d = std::abs(r[i]) <= delta ? r[i]
                                         : delta * (r[i] > 0 ? 1.0 : -1.0);
      pp->grad[i] += w * d;
    }
  });
}

Tensor cross_entropy_loss(const Tensor& logits,
                          const std::vector<int>& targets) {
  require_rank2(logits, "cross_entropy");
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n)
    throw ContractError("cross_entropy: " + std::to_string(targets.size()) +
                        " targets for " + shape_str(logits.shape()));
  auto lv = val(*logits.node());
  Mat soft(n, k);
  double acc = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (targets[r] < 0 || targets[r] >= k)
      throw ContractError("cross_entropy: target " +
                          std::to_string(targets[r]) + " out of range for " +
                          std::to_string(k) + " classes");
    double mx = lv.row(r).maxCoeff();
    Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (lv.row(r).array() - mx).exp();
    double z = e.sum();
    soft.row(r) = (e / z).matrix();
    acc += std::log(z) + mx - lv(r, targets[r]);
  }
  Vec out(1);
  out[0] = acc / static_cast<double>(n);
  auto pl = logits.node();
  return make_op({1}, out, {logits}, [pl, soft, targets](Node& self) {
    if (!pl->requires_grad) return;
    pl->ensure_grad();
    auto gx = gmut(*pl);
    const double w = self.grad[0] / static_cast<double>(soft.rows());
    for (Eigen::Index r = 0; r < soft.rows(); ++r) {
      gx.row(r) += w * soft.row(r);
      gx(r, targets[r]) -= w;
    }
  });
}

// --- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward: loss must be a defined scalar tensor");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; only requires_grad nodes can reach parameters.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() > 0) n->backprop(*n);
  }
}

double finite_diff_check(const std::function<double()>& f, Tensor& theta,
                         double h) {
  if (!theta.has_grad())
    throw ContractError(
        "finite_diff_check: analytic gradient missing; run backward first");
  const Vec analytic = theta.grad();
  Vec& data = theta.value_mut();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    const double orig = data[k];
    data[k] = orig + h;
    const double fp = f();
    data[k] = orig - h;
    const double fm = f();
    data[k] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericsError("finite_diff_check: non-finite objective value");
    const double central = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic[k] - central) /
                       std::max(1e-12, std::abs(central));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace equifuse
