#include "equifuse/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "equifuse/checkpoint.hpp"

namespace equifuse {

using nlohmann::json;

SplitIndices split_dataset(int n_records, std::uint64_t seed) {
  std::vector<int> order(n_records);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(split_seed(seed, 11));
  std::shuffle(order.begin(), order.end(), rng.engine());
  SplitIndices s;
  const int n_val = n_records / 10;
  const int n_test = n_records / 10;
  for (int k = 0; k < n_records; ++k) {
    if (k < n_val) s.val.push_back(order[k]);
    else if (k < n_val + n_test) s.test.push_back(order[k]);
    else s.train.push_back(order[k]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

std::string first_nonfinite_tensor(const std::vector<ParamGroup>& groups) {
  for (const ParamGroup& g : groups)
    for (const NamedTensor& p : g.tensors)
      if (!p.tensor.value().allFinite()) return g.name + "/" + p.name;
  return "loss";
}

struct DynamicsData {
  std::vector<Trajectory> trajs;
  SplitIndices split;
  // Sampled training windows as (trajectory index, window) pairs.
  std::vector<std::pair<int, Window>> train_windows;
};

DynamicsData load_dynamics(const RunConfig& cfg) {
  DynamicsData d;
  d.trajs = load_trajectories(cfg.dataset);
  if (d.trajs.empty()) throw DataError("train: dataset " + cfg.dataset + " has no trajectories");
  d.split = split_dataset(static_cast<int>(d.trajs.size()), cfg.seed);
  for (int idx : d.split.train) {
    auto ws = sample_windows(d.trajs[idx], cfg.T, cfg.F, cfg.windows_per_traj,
                             split_seed(cfg.seed, 2000 + idx));
    for (Window& w : ws) d.train_windows.emplace_back(idx, std::move(w));
  }
  return d;
}

double dynamics_window_loss(const Model& model, const Trajectory& traj,
                            const Window& w, Tensor* tape_loss) {
  DynamicsOutput out = model.forward_dynamics(traj.skeleton, w.input);
  Tensor loss = mse_loss(out.frames, w.target);
  if (tape_loss) *tape_loss = loss;
  return loss.item();
}

double dynamics_mean_loss(const Model& model, const DynamicsData& d) {
  double acc = 0.0;
  for (const auto& [idx, w] : d.train_windows)
    acc += dynamics_window_loss(model, d.trajs[idx], w, nullptr);
  return acc / static_cast<double>(d.train_windows.size());
}

json dynamics_split_metrics(const Model& model, const RunConfig& cfg,
                            const std::vector<Trajectory>& trajs,
                            const std::vector<int>& indices) {
  if (indices.empty()) throw DataError("evaluate: split is empty");
  double total = 0.0;
  std::vector<double> per_frame(cfg.F, 0.0);
  int count = 0;
  for (int idx : indices) {
    auto ws = sample_windows(trajs[idx], cfg.T, cfg.F, cfg.windows_per_traj,
                             split_seed(cfg.seed, 5000 + idx));
    for (const Window& w : ws) {
      std::vector<MatX3> pred = model.predict_frames(trajs[idx].skeleton, w.input);
      total += mse_value(pred, w.target);
      for (int f = 0; f < cfg.F; ++f)
        per_frame[f] += mse_value_frame(pred[f], w.target[f]);
      ++count;
    }
  }
  json m;
  m["mse"] = total / count;
  json pf = json::array();
  for (double v : per_frame) pf.push_back(v / count);
  m["per_frame_mse"] = pf;
  m["windows"] = count;
  return m;
}

struct DesignData {
  std::vector<ResidueStructure> samples;
  std::vector<ResidueGraph> graphs;
  SplitIndices split;
};

DesignData load_design(const RunConfig& cfg) {
  DesignData d;
  d.samples = load_residues(cfg.dataset);
  if (d.samples.empty()) throw DataError("train: dataset " + cfg.dataset + " has no residue records");
  for (const ResidueStructure& rs : d.samples)
    d.graphs.push_back(residue_to_graph(rs));
  d.split = split_dataset(static_cast<int>(d.samples.size()), cfg.seed);
  return d;
}

double design_sample_loss(const Model& model, const RunConfig& cfg,
                          const DesignData& d, int idx, Tensor* tape_loss) {
  DesignOutput out = model.forward_design(d.graphs[idx]);
  DesignLoss loss = design_loss(out.logits, out.backbone, d.samples[idx],
                                cfg.lambda, cfg.delta);
  if (tape_loss) *tape_loss = loss.total;
  return loss.report.total;
}

double design_mean_loss(const Model& model, const RunConfig& cfg,
                        const DesignData& d, const std::vector<int>& indices) {
  double acc = 0.0;
  for (int idx : indices) acc += design_sample_loss(model, cfg, d, idx, nullptr);
  return acc / static_cast<double>(indices.size());
}

json design_split_metrics(const Model& model, const DesignData& d,
                          const std::vector<int>& indices) {
  if (indices.empty()) throw DataError("evaluate: split is empty");
  double aar_acc = 0.0, rmsd_acc = 0.0;
  for (int idx : indices) {
    ResidueStructure pred = model.predict_design(d.samples[idx]);
    aar_acc += compute_aar(pred.categories, d.samples[idx].categories);
    rmsd_acc += compute_rmsd(stack_backbone(pred), stack_backbone(d.samples[idx]));
  }
  json m;
  m["aar"] = aar_acc / indices.size();
  m["rmsd"] = rmsd_acc / indices.size();
  m["samples"] = indices.size();
  return m;
}

Model build_model(const RunConfig& cfg, Eigen::Index feature_width) {
  return Model::create(cfg.model_config(feature_width), cfg.prompt_spec());
}

Eigen::Index dataset_feature_width(const RunConfig& cfg) {
  if (cfg.task_kind() == TaskKind::design) return kResidueFeatureWidth;
  auto trajs = load_trajectories(cfg.dataset);
  if (trajs.empty()) throw DataError("dataset " + cfg.dataset + " is empty");
  return trajs.front().skeleton.features.cols();
}

// Generic training loop over per-item tape losses.
template <typename LossFn>
std::vector<double> run_epochs(const RunConfig& cfg,
                               std::vector<ParamGroup>& groups, int n_items,
                               LossFn&& item_loss) {
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  AdamState state;
  std::vector<double> epoch_losses;
  long t = 0;
  std::vector<int> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(split_seed(cfg.seed, 9000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double epoch_acc = 0.0;
    for (int at = 0; at < n_items; at += cfg.batch_size) {
      const int bn = std::min(cfg.batch_size, n_items - at);
      zero_grad(groups);
      Tensor batch_loss;
      for (int b = 0; b < bn; ++b) {
        Tensor item = item_loss(order[at + b]);
        batch_loss = b == 0 ? item : add(batch_loss, item);
      }
      batch_loss = scale(batch_loss, 1.0 / bn);
      const double lv = batch_loss.item();
      if (!std::isfinite(lv))
        throw NumericsError("train: non-finite loss at step " +
                            std::to_string(t + 1) +
                            "; first non-finite tensor: " +
                            first_nonfinite_tensor(groups));
      epoch_acc += lv * bn;
      backward(batch_loss);
      materialize_missing_grads(groups);
      clip_grad_norm(groups, cfg.grad_clip);
      adam_step(groups, state, adam, ++t);
    }
    epoch_losses.push_back(epoch_acc / n_items);
  }
  return epoch_losses;
}

}  // namespace

json train_run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("train: config needs a dataset path");
  std::filesystem::create_directories(cfg.out_dir);

  json report;
  report["config"] = cfg.to_json();
  report["seed"] = cfg.seed;

  Model model = build_model(cfg, dataset_feature_width(cfg));
  std::vector<ParamGroup> groups = model.param_groups();

  if (cfg.task_kind() == TaskKind::dynamics) {
    DynamicsData data = load_dynamics(cfg);
    report["splits"] = {{"train", data.split.train.size()},
                        {"val", data.split.val.size()},
                        {"test", data.split.test.size()}};
    report["initial_train_loss"] = dynamics_mean_loss(model, data);
    auto losses = run_epochs(
        cfg, groups, static_cast<int>(data.train_windows.size()),
        [&](int k) {
          Tensor loss;
          dynamics_window_loss(model, data.trajs[data.train_windows[k].first],
                               data.train_windows[k].second, &loss);
          return loss;
        });
    report["train_loss_per_epoch"] = losses;
    report["final_train_loss"] =
        cfg.epochs > 0 ? dynamics_mean_loss(model, data)
                       : report["initial_train_loss"].get<double>();
    json metrics;
    if (!data.split.val.empty())
      metrics["val"] = dynamics_split_metrics(model, cfg, data.trajs, data.split.val);
    if (!data.split.test.empty())
      metrics["test"] = dynamics_split_metrics(model, cfg, data.trajs, data.split.test);
    report["metrics"] = metrics;
  } else {
    DesignData data = load_design(cfg);
    report["splits"] = {{"train", data.split.train.size()},
                        {"val", data.split.val.size()},
                        {"test", data.split.test.size()}};
    report["initial_train_loss"] =
        design_mean_loss(model, cfg, data, data.split.train);
    auto losses = run_epochs(
        cfg, groups, static_cast<int>(data.split.train.size()), [&](int k) {
          Tensor loss;
          design_sample_loss(model, cfg, data, data.split.train[k], &loss);
          return loss;
        });
    report["train_loss_per_epoch"] = losses;
    report["final_train_loss"] =
        cfg.epochs > 0 ? design_mean_loss(model, cfg, data, data.split.train)
                       : report["initial_train_loss"].get<double>();
    json metrics;
    metrics["train"] = design_split_metrics(model, data, data.split.train);
    if (!data.split.val.empty())
      metrics["val"] = design_split_metrics(model, data, data.split.val);
    if (!data.split.test.empty())
      metrics["test"] = design_split_metrics(model, data, data.split.test);
    report["metrics"] = metrics;
  }

  save_checkpoint(cfg.out_dir + "/checkpoint.json", groups);
  const auto t1 = std::chrono::steady_clock::now();
  report["wall_clock_sec"] =
      std::chrono::duration<double>(t1 - t0).count();

  std::ofstream out(cfg.out_dir + "/report.json");
  if (!out) throw DataError("train: cannot write report in " + cfg.out_dir);
  out << report.dump(2) << "\n";
  return report;
}

json evaluate_run(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& split) {
  cfg.validate();
  Model model = build_model(cfg, dataset_feature_width(cfg));
  std::vector<ParamGroup> groups = model.param_groups();
  load_checkpoint(checkpoint_path, groups);

  json report;
  report["config"] = cfg.to_json();
  report["checkpoint"] = checkpoint_path;
  report["split"] = split;

  if (cfg.task_kind() == TaskKind::dynamics) {
    auto trajs = load_trajectories(cfg.dataset);
    SplitIndices s = split_dataset(static_cast<int>(trajs.size()), cfg.seed);
    const std::vector<int>& idx =
        split == "train" ? s.train : (split == "val" ? s.val : s.test);
    report["metrics"] = dynamics_split_metrics(model, cfg, trajs, idx);
  } else {
    DesignData data = load_design(cfg);
    const std::vector<int>& idx = split == "train"
                                      ? data.split.train
                                      : (split == "val" ? data.split.val
                                                        : data.split.test);
    report["metrics"] = design_split_metrics(model, data, idx);
  }
  return report;
}

void predict_run(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& input_path,
                 const std::string& output_path) {
  cfg.validate();
  Model model = build_model(cfg, dataset_feature_width(cfg));
  std::vector<ParamGroup> groups = model.param_groups();
  load_checkpoint(checkpoint_path, groups);

  if (cfg.task_kind() == TaskKind::dynamics) {
    auto inputs = load_trajectories(input_path);
    std::vector<Trajectory> outputs;
    for (const Trajectory& traj : inputs) {
      if (traj.n_frames() < cfg.T)
        throw DataError("predict: trajectory has " +
                        std::to_string(traj.n_frames()) + " frames, need " +
                        std::to_string(cfg.T));
      std::vector<MatX3> window(traj.frames.end() - cfg.T, traj.frames.end());
      Trajectory pred;
      pred.skeleton = traj.skeleton;
      pred.frames = model.predict_frames(traj.skeleton, window);
      pred.skeleton.coords = pred.frames.front();
      outputs.push_back(std::move(pred));
    }
    save_trajectories(output_path, outputs);
  } else {
    auto inputs = load_residues(input_path);
    std::vector<ResidueStructure> outputs;
    for (const ResidueStructure& rs : inputs)
      outputs.push_back(model.predict_design(rs));
    save_residues(output_path, outputs);
  }
}

const std::vector<std::string>& ablation_row_names() {
  static const std::vector<std::string> rows = {
      "encoder_only",
      "llm_no_prompt_then_encoder",
      "llm_then_encoder",
      "full_no_prompt",
      "full_no_object",
      "full_no_statistics",
      "full",
  };
  return rows;
}

RunConfig ablation_row_config(const RunConfig& base, const std::string& row) {
  RunConfig cfg = base;
  cfg.use_prompt = true;
  cfg.use_object = true;
  cfg.use_statistics = true;
  if (row == "encoder_only") {
    cfg.variant = "encoder_only";
    cfg.use_prompt = false;
  } else if (row == "llm_no_prompt_then_encoder") {
    cfg.variant = "llm_no_prompt_then_encoder";
    cfg.use_prompt = false;
  } else if (row == "llm_then_encoder") {
    cfg.variant = "llm_then_encoder";
  } else if (row == "full_no_prompt") {
    cfg.variant = "full";
    cfg.use_prompt = false;
  } else if (row == "full_no_object") {
    cfg.variant = "full";
    cfg.use_object = false;
  } else if (row == "full_no_statistics") {
    cfg.variant = "full";
    cfg.use_statistics = false;
  } else if (row == "full") {
    cfg.variant = "full";
  } else {
    throw ConfigError("ablate: unknown row '" + row + "'");
  }
  return cfg;
}

json ablate_run(const RunConfig& base, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  json combined = json::array();
  std::vector<std::string> csv_rows;
  for (const std::string& row : ablation_row_names()) {
    RunConfig cfg = ablation_row_config(base, row);
    cfg.out_dir = out_dir + "/" + row;
    json entry;
    entry["variant"] = row;
    entry["seed"] = cfg.seed;
    try {
      json report = train_run(cfg);
      entry["status"] = "ok";
      entry["initial_train_loss"] = report["initial_train_loss"];
      entry["final_train_loss"] = report["final_train_loss"];
      if (report["metrics"].contains("test"))
        entry["test_metrics"] = report["metrics"]["test"];
      auto emit = [&](const std::string& metric, double value) {
        csv_rows.push_back(row + "," + std::to_string(cfg.seed) + "," + metric +
                           "," + std::to_string(value));
      };
      emit("initial_train_loss", report["initial_train_loss"]);
      emit("final_train_loss", report["final_train_loss"]);
      if (report["metrics"].contains("test")) {
        const json& test = report["metrics"]["test"];
        if (test.contains("mse")) emit("test_mse", test["mse"]);
        if (test.contains("aar")) emit("test_aar", test["aar"]);
        if (test.contains("rmsd")) emit("test_rmsd", test["rmsd"]);
      }
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      csv_rows.push_back(row + "," + std::to_string(cfg.seed) + ",failed,1");
    }
    combined.push_back(std::move(entry));
  }
  std::ofstream csv(out_dir + "/ablation.csv");
  if (!csv) throw DataError("ablate: cannot write " + out_dir + "/ablation.csv");
  csv << "variant,seed,metric,value\n";
  for (const std::string& line : csv_rows) csv << line << "\n";

  std::ofstream js(out_dir + "/ablation.json");
  js << combined.dump(2) << "\n";
  return combined;
}

}  // namespace equifuse
