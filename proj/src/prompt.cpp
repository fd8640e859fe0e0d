#include "equifuse/prompt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace equifuse {

namespace {
std::atomic<std::uint64_t> g_render_calls{0};
}

DistanceStats compute_statistics(const GeometricGraph& g) {
  std::vector<double> dists = edge_distances(g);
  if (dists.empty())
    throw ContractError("statistics: graph has no edges; omit <Statistics>");
  DistanceStats s;
  s.d_min = *std::min_element(dists.begin(), dists.end());
  s.d_max = *std::max_element(dists.begin(), dists.end());
  s.d_mean = std::accumulate(dists.begin(), dists.end(), 0.0) /
             static_cast<double>(dists.size());
  return s;
}

double round_half_away(double v, int decimals) {
  const double p = std::pow(10.0, decimals);
  return std::round(v * p) / p;
}

DistanceStats rounded(const DistanceStats& s, int decimals) {
  return {round_half_away(s.d_min, decimals),
          round_half_away(s.d_max, decimals),
          round_half_away(s.d_mean, decimals)};
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string substitute_placeholders(const std::string& body,
                                    const PromptContext& ctx, int decimals) {
  const DistanceStats r = rounded(ctx.stats, decimals);
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"{T}", std::to_string(ctx.t_in)},
      {"{F}", std::to_string(ctx.f_out)},
      {"{n_nodes}", std::to_string(ctx.n_nodes)},
      {"{d_min}", format_fixed(r.d_min, decimals)},
      {"{d_max}", format_fixed(r.d_max, decimals)},
      {"{d_mean}", format_fixed(r.d_mean, decimals)},
  };
  std::string out = body;
  for (const auto& [key, value] : subs) {
    size_t at = 0;
    while ((at = out.find(key, at)) != std::string::npos) {
      out.replace(at, key.size(), value);
      at += value.size();
    }
  }
  return out;
}

std::string render_prompt(const PromptSpec& spec, const PromptContext& ctx) {
  g_render_calls.fetch_add(1, std::memory_order_relaxed);
  std::string out;
  auto section = [&out](const std::string& marker, const std::string& body) {
    if (!out.empty()) out += "\n";
    out += marker + " " + body;
  };
  if (!spec.task_text.empty())
    section("<Task>", substitute_placeholders(spec.task_text, ctx, spec.decimals));
  if (spec.include_object && !spec.object_text.empty())
    section("<Object>",
            substitute_placeholders(spec.object_text, ctx, spec.decimals));
  if (spec.include_statistics && ctx.has_stats) {
    const DistanceStats r = rounded(ctx.stats, spec.decimals);
    section("<Statistics>", "min=" + format_fixed(r.d_min, spec.decimals) +
                                ", max=" + format_fixed(r.d_max, spec.decimals) +
                                ", mean=" + format_fixed(r.d_mean, spec.decimals));
  }
  if (!spec.requirement_text.empty())
    section("<Requirement>",
            substitute_placeholders(spec.requirement_text, ctx, spec.decimals));
  return out;
}

std::vector<int> tokenize(const std::string& text) {
  std::vector<int> ids;
  ids.reserve(text.size() + 2);
  ids.push_back(kTokenBos);
  for (unsigned char ch : text) ids.push_back(static_cast<int>(ch));
  ids.push_back(kTokenEos);
  return ids;
}

std::string detokenize(const std::vector<int>& ids) {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= kVocabSize)
      throw ContractError("detokenize: id " + std::to_string(id) +
                          " outside vocabulary");
    if (id < 256) out.push_back(static_cast<char>(id));
  }
  return out;
}

PromptSpec load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("prompt template: cannot read " + path);
  PromptSpec spec;
  std::string* current = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "[task]") {
      current = &spec.task_text;
    } else if (line == "[object]") {
      current = &spec.object_text;
    } else if (line == "[requirement]") {
      current = &spec.requirement_text;
    } else if (!line.empty() && line.front() == '[') {
      throw DataError("prompt template: unknown section at " + path + ":" +
                      std::to_string(line_no) + ": " + line);
    } else {
      if (!current) {
        if (line.empty()) continue;
        throw DataError("prompt template: text before any section at " + path +
                        ":" + std::to_string(line_no));
      }
      if (!current->empty()) *current += " ";
      *current += line;
    }
  }
  return spec;
}

PromptSpec default_dynamics_prompt() {
  PromptSpec spec;
  spec.task_text =
      "Predict 3D coordinates for the next {F} frames from {T} observed frames.";
  spec.object_text = "{n_nodes} connected interacting nodes.";
  spec.requirement_text = "Keep the motion physically plausible.";
  return spec;
}

PromptSpec default_design_prompt() {
  PromptSpec spec;
  spec.task_text = "Predict the category sequence and backbone coordinates.";
  spec.object_text = "{n_nodes} backbone atoms, four per residue.";
  spec.requirement_text = "Pick one of 20 categories per residue.";
  return spec;
}

std::uint64_t prompt_render_calls() {
  return g_render_calls.load(std::memory_order_relaxed);
}

void reset_prompt_render_calls() { g_render_calls.store(0); }

}  // namespace equifuse
