#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equifuse/mlp.hpp"

namespace equifuse {

// A named set of parameter tensors. Frozen groups are never touched by the
// optimizer; their bytes stay identical across any number of steps.
struct ParamGroup {
  std::string name;
  std::vector<NamedTensor> tensors;
  bool frozen = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers, positionally aligned with the groups they
// were created for.
struct AdamState {
  std::vector<std::vector<Vec>> m, v;
  void ensure(const std::vector<ParamGroup>& groups);
};

// One Adam update with bias correction at step index t (t >= 1). Pure in
// (params, grads, state, t): identical inputs give bit-identical results.
// Throws ContractError when a trainable tensor has no gradient.
void adam_step(std::vector<ParamGroup>& groups, AdamState& state,
               const AdamConfig& cfg, long t);

// Scales all non-frozen gradients so their global L2 norm is at most
// max_norm. Returns the pre-clip norm. No-op when max_norm <= 0.
double clip_grad_norm(std::vector<ParamGroup>& groups, double max_norm);

void zero_grad(std::vector<ParamGroup>& groups);

// Zero gradients for parameters the loss does not reach (one adapter layer
// serves both coordinate and feature outputs, so a coordinates-only
// objective leaves its feature path unconnected).
void materialize_missing_grads(std::vector<ParamGroup>& groups,
                               bool include_frozen = false);

// Order-stable FNV-1a digest over all parameter bytes of a group.
std::uint64_t group_fingerprint(const ParamGroup& group);

}  // namespace equifuse
