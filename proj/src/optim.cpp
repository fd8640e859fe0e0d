#include "equifuse/optim.hpp"

#include <cmath>
#include <cstring>

namespace equifuse {

void AdamState::ensure(const std::vector<ParamGroup>& groups) {
  if (!m.empty()) return;
  m.resize(groups.size());
  v.resize(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    m[g].resize(groups[g].tensors.size());
    v[g].resize(groups[g].tensors.size());
    for (size_t i = 0; i < groups[g].tensors.size(); ++i) {
      const Eigen::Index n = groups[g].tensors[i].tensor.size();
      m[g][i] = Vec::Zero(n);
      v[g][i] = Vec::Zero(n);
    }
  }
}

void adam_step(std::vector<ParamGroup>& groups, AdamState& state,
               const AdamConfig& cfg, long t) {
  if (t < 1) throw ContractError("adam_step: step index must be >= 1");
  state.ensure(groups);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].frozen) continue;
    for (size_t i = 0; i < groups[g].tensors.size(); ++i) {
      NamedTensor& p = groups[g].tensors[i];
      if (!p.tensor.has_grad())
        throw ContractError("adam_step: missing gradient on trainable tensor " +
                            groups[g].name + "/" + p.name);
      const Vec& grad = p.tensor.grad();
      Vec& mg = state.m[g][i];
      Vec& vg = state.v[g][i];
      mg = cfg.beta1 * mg + (1.0 - cfg.beta1) * grad;
      vg = cfg.beta2 * vg + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
      Vec& data = p.tensor.value_mut();
      for (Eigen::Index k = 0; k < data.size(); ++k) {
        const double mhat = mg[k] / bc1;
        const double vhat = vg[k] / bc2;
        data[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      }
    }
  }
}

double clip_grad_norm(std::vector<ParamGroup>& groups, double max_norm) {
  double sq = 0.0;
  for (ParamGroup& g : groups) {
    if (g.frozen) continue;
    for (NamedTensor& p : g.tensors)
      if (p.tensor.has_grad()) sq += p.tensor.grad().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (ParamGroup& g : groups) {
      if (g.frozen) continue;
      for (NamedTensor& p : g.tensors)
        if (p.tensor.has_grad()) p.tensor.grad_mut() *= factor;
    }
  }
  return norm;
}

void zero_grad(std::vector<ParamGroup>& groups) {
  for (ParamGroup& g : groups)
    for (NamedTensor& p : g.tensors) p.tensor.zero_grad();
}

void materialize_missing_grads(std::vector<ParamGroup>& groups,
                               bool include_frozen) {
  for (ParamGroup& g : groups) {
    if (g.frozen && !include_frozen) continue;
    for (NamedTensor& p : g.tensors)
      if (!p.tensor.has_grad()) p.tensor.materialize_zero_grad();
  }
}

std::uint64_t group_fingerprint(const ParamGroup& group) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* bytes, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const NamedTensor& p : group.tensors) {
    mix(p.name.data(), p.name.size());
    const Vec& v = p.tensor.value();
    mix(v.data(), sizeof(Scalar) * static_cast<size_t>(v.size()));
  }
  return h;
}

}  // namespace equifuse
