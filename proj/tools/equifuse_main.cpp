#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "equifuse/residues.hpp"
#include "equifuse/springs.hpp"
#include "equifuse/train.hpp"

namespace {

using namespace equifuse;

// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericsError*>(&e)) return 4;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ContractError*>(&e))
    return 2;
  return 1;
}

struct CommonOverrides {
  std::string config_path;
  std::string out_dir;
  std::string prompt_template;
  std::string variant;
  std::string dataset;
  std::uint64_t seed = 0;
  bool seed_set = false;

  RunConfig load() const {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (seed_set) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!prompt_template.empty()) cfg.prompt_template = prompt_template;
    if (!variant.empty()) cfg.variant = variant;
    if (!dataset.empty()) cfg.dataset = dataset;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOverrides& ov) {
  cmd->add_option("--config", ov.config_path, "Run configuration file (JSON)")
      ->required();
  cmd->add_option("--seed", ov.seed, "Override the run seed")
      ->each([&ov](const std::string&) { ov.seed_set = true; });
  cmd->add_option("--out", ov.out_dir, "Override the output directory");
  cmd->add_option("--prompt-template", ov.prompt_template,
                  "Prompt template file ([task]/[object]/[requirement] sections)");
  cmd->add_option("--variant", ov.variant, "Override the architecture variant");
  cmd->add_option("--dataset", ov.dataset, "Override the dataset path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant geometry + frozen sequence-model fusion"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string gen_task = "dynamics", gen_out;
  SpringSystemConfig spring;
  ResidueSystemConfig residue;
  int gen_n_traj = 20;
  std::uint64_t gen_seed = 0;
  gen->add_option("--task", gen_task, "dynamics | design");
  gen->add_option("--out", gen_out, "Output dataset path")->required();
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--n-traj", gen_n_traj, "Trajectories (dynamics)");
  gen->add_option("--n-nodes", spring.n_nodes, "Nodes per system");
  gen->add_option("--n-steps", spring.n_steps, "Frames per trajectory");
  gen->add_option("--dt", spring.dt, "Integration step");
  gen->add_option("--stiffness", spring.stiffness, "Spring stiffness");
  gen->add_option("--damping", spring.damping, "Viscous drag");
  gen->add_option("--mean-degree", spring.mean_degree, "Mean node degree");
  gen->add_option("--n-samples", residue.n_samples, "Residue samples (design)");
  gen->add_option("--n-residues", residue.n_residues, "Residues per sample");
  gen->add_option("--category-scale", residue.category_scale,
                  "Backbone scale step per category (design)");

  // train / eval / predict / ablate
  CommonOverrides train_ov, eval_ov, predict_ov, ablate_ov;
  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train, train_ov);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_ov);
  std::string eval_checkpoint, eval_split = "test";
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", eval_split, "train | val | test");

  auto* predict = app.add_subcommand("predict", "Predict from a checkpoint");
  add_common(predict, predict_ov);
  std::string pred_checkpoint, pred_input, pred_output;
  predict->add_option("--checkpoint", pred_checkpoint, "Checkpoint file")->required();
  predict->add_option("--input", pred_input, "Input dataset file")->required();
  predict->add_option("--output", pred_output, "Output dataset file")->required();

  auto* ablate = app.add_subcommand("ablate", "Run the seven-row ablation matrix");
  add_common(ablate, ablate_ov);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (gen_task == "dynamics") {
        std::vector<Trajectory> trajs;
        for (int i = 0; i < gen_n_traj; ++i) {
          SpringSystemConfig cfg = spring;
          cfg.seed = split_seed(gen_seed, static_cast<std::uint64_t>(i));
          trajs.push_back(gen_spring_system(cfg));
        }
        save_trajectories(gen_out, trajs);
        std::cout << "wrote " << trajs.size() << " trajectories to " << gen_out
                  << "\n";
      } else if (gen_task == "design") {
        ResidueSystemConfig cfg = residue;
        cfg.seed = gen_seed;
        auto samples = gen_residue_system(cfg);
        save_residues(gen_out, samples);
        std::cout << "wrote " << samples.size() << " residue samples to "
                  << gen_out << "\n";
      } else {
        throw ConfigError("gen-data: unknown task '" + gen_task + "'");
      }
    } else if (train->parsed()) {
      nlohmann::json report = train_run(train_ov.load());
      std::cout << report.dump(2) << "\n";
    } else if (eval->parsed()) {
      nlohmann::json report =
          evaluate_run(eval_ov.load(), eval_checkpoint, eval_split);
      std::cout << report.dump(2) << "\n";
    } else if (predict->parsed()) {
      predict_run(predict_ov.load(), pred_checkpoint, pred_input, pred_output);
      std::cout << "wrote predictions to " << pred_output << "\n";
    } else if (ablate->parsed()) {
      RunConfig base = ablate_ov.load();
      nlohmann::json combined = ablate_run(
          base, ablate_ov.out_dir.empty() ? base.out_dir : ablate_ov.out_dir);
      std::cout << combined.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
