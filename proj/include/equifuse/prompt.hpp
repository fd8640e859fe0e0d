#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equifuse/autodiff.hpp"
#include "equifuse/geometry.hpp"

namespace equifuse {

// Edge-distance summary. Derived from pairwise distances only, so it is
// invariant under any rigid transform of the graph.
struct DistanceStats {
  double d_min = 0.0;
  double d_max = 0.0;
  double d_mean = 0.0;
};

// Raw (unrounded) min/max/mean of edge_distances(g).
// Throws ContractError when the graph has no edges; callers must omit the
// <Statistics> section in that case.
DistanceStats compute_statistics(const GeometricGraph& g);

double round_half_away(double v, int decimals);
DistanceStats rounded(const DistanceStats& s, int decimals);
// Fixed-point rendering with exactly `decimals` fractional digits.
std::string format_fixed(double v, int decimals);

// Prompt section bodies plus toggles. Markers are rendered exactly as
// <Task>, <Object>, <Statistics>, <Requirement>; empty bodies drop their
// section.
struct PromptSpec {
  std::string task_text;
  std::string object_text;
  std::string requirement_text;
  bool include_object = true;
  bool include_statistics = true;
  int decimals = 3;
};

// Values available to {T}, {F}, {n_nodes}, {d_min}, {d_max}, {d_mean}
// placeholders inside section bodies.
struct PromptContext {
  int t_in = 0;
  int f_out = 0;
  int n_nodes = 0;
  DistanceStats stats;
  bool has_stats = false;
};

std::string substitute_placeholders(const std::string& body,
                                    const PromptContext& ctx, int decimals);

// Deterministic template:
//   <Task> ...
//   <Object> ...
//   <Statistics> min=..., max=..., mean=...
//   <Requirement> ...
// Statistics values are rounded half-away-from-zero to spec.decimals and
// printed with exactly that many fractional digits.
std::string render_prompt(const PromptSpec& spec, const PromptContext& ctx);

// Byte-level tokenizer: ids 0..255 are raw bytes, then BOS/EOS/PAD.
inline constexpr int kVocabSize = 259;
inline constexpr int kTokenBos = 256;
inline constexpr int kTokenEos = 257;
inline constexpr int kTokenPad = 258;

// [BOS] + bytes + [EOS]; total on any UTF-8 input.
std::vector<int> tokenize(const std::string& text);
// Exact inverse on tokenize output; BOS/EOS/PAD are skipped.
std::string detokenize(const std::vector<int>& ids);

// Rendered prompt with its token ids and embedded rows (the matrix P).
struct PromptBundle {
  std::string text;
  std::vector<int> token_ids;
  Tensor embedded;  // [L x d_llm]
};

// Section bodies from a plain-text template file with [task] / [object] /
// [requirement] section headers.
PromptSpec load_prompt_template(const std::string& path);
PromptSpec default_dynamics_prompt();
PromptSpec default_design_prompt();

// Ablation wiring checks count renders here.
std::uint64_t prompt_render_calls();
void reset_prompt_render_calls();

}  // namespace equifuse
