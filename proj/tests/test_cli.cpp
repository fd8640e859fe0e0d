#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "equifuse/springs.hpp"
#include "equifuse/train.hpp"
#include "helpers.hpp"

using namespace equifuse;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_dynamics_dataset(const TempDir& dir, int n_traj = 12,
                                   int n_nodes = 4, int n_steps = 24) {
  std::vector<Trajectory> trajs;
  for (int i = 0; i < n_traj; ++i) {
    SpringSystemConfig cfg;
    cfg.n_nodes = n_nodes;
    cfg.n_steps = n_steps;
    cfg.seed = split_seed(31, i);
    trajs.push_back(gen_spring_system(cfg));
  }
  std::string path = dir.file("springs.traj.jsonl");
  save_trajectories(path, trajs);
  return path;
}

RunConfig tiny_run(const std::string& dataset, const std::string& out_dir) {
  RunConfig cfg;
  cfg.T = 6;
  cfg.F = 4;
  cfg.hidden = 8;
  cfg.encoder_layers = 1;
  cfg.d_llm = 8;
  cfg.lm_blocks = 1;
  cfg.n_heads = 2;
  cfg.max_seq_len = 256;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.windows_per_traj = 2;
  cfg.lr = 1e-2;
  cfg.seed = 7;
  cfg.dataset = dataset;
  cfg.out_dir = out_dir;
  return cfg;
}

json strip_clock(json report) {
  report.erase("wall_clock_sec");
  report["config"].erase("out_dir");  // differs between the two runs by design
  return report;
}

}  // namespace

TEST_CASE("config: round trip and unknown-key rejection") {
  RunConfig cfg;
  cfg.dataset = "x.traj.jsonl";
  RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  json doc = cfg.to_json();
  doc["learning_rate"] = 0.1;  // typo'd key
  CHECK_THROWS_WITH_AS(RunConfig::from_json(doc),
                       doctest::Contains("learning_rate"), ConfigError);
}

TEST_CASE("config: validation catches bad frame counts") {
  RunConfig cfg;
  cfg.T = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.T = 10;
  cfg.task = "design";
  cfg.F = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.F = 1;
  cfg.validate();
}

TEST_CASE("train_run: epochs = 0 reports the initial loss only") {
  TempDir dir("equifuse_test_e0");
  RunConfig cfg = tiny_run(write_dynamics_dataset(dir), dir.file("run"));
  cfg.epochs = 0;
  json report = train_run(cfg);
  CHECK(report["train_loss_per_epoch"].empty());
  CHECK(report["final_train_loss"] == report["initial_train_loss"]);
  CHECK(fs::exists(dir.file("run") + "/checkpoint.json"));

  // checkpoint equals initialization: loading it back changes nothing
  json eval_before =
      evaluate_run(cfg, dir.file("run") + "/checkpoint.json", "test");
  CHECK(eval_before["metrics"]["mse"].get<double>() > 0.0);
}

TEST_CASE("train_run: initial loss equals the persistence baseline") {
  TempDir dir("equifuse_test_persist");
  std::string dataset = write_dynamics_dataset(dir);
  RunConfig cfg = tiny_run(dataset, dir.file("run"));
  cfg.epochs = 0;
  json report = train_run(cfg);

  // oracle: broadcast the last input frame over the horizon, averaged the
  // same way over the sampled training windows
  auto trajs = load_trajectories(dataset);
  SplitIndices split = split_dataset(static_cast<int>(trajs.size()), cfg.seed);
  double acc = 0.0;
  int count = 0;
  for (int idx : split.train) {
    auto ws = sample_windows(trajs[idx], cfg.T, cfg.F, cfg.windows_per_traj,
                             split_seed(cfg.seed, 2000 + idx));
    for (const Window& w : ws) {
      std::vector<MatX3> persist(cfg.F, w.input.back());
      acc += mse_value(persist, w.target);
      ++count;
    }
  }
  CHECK(report["initial_train_loss"].get<double>() ==
        doctest::Approx(acc / count).epsilon(1e-10));
}

TEST_CASE("train_run: same seed gives byte-identical reports") {
  TempDir dir("equifuse_test_det");
  std::string dataset = write_dynamics_dataset(dir, 10, 3, 16);
  RunConfig cfg = tiny_run(dataset, dir.file("a"));
  cfg.T = 4;
  cfg.F = 3;
  cfg.epochs = 1;
  json a = train_run(cfg);
  cfg.out_dir = dir.file("b");
  json b = train_run(cfg);
  CHECK(strip_clock(a).dump() == strip_clock(b).dump());
}

TEST_CASE("train_run: training reduces the loss on the springs dataset") {
  TempDir dir("equifuse_test_learn");
  RunConfig cfg = tiny_run(write_dynamics_dataset(dir), dir.file("run"));
  cfg.epochs = 10;
  json report = train_run(cfg);
  CHECK(report["final_train_loss"].get<double>() <
        report["initial_train_loss"].get<double>());
}

TEST_CASE("evaluate: train-split metrics match the final train state") {
  TempDir dir("equifuse_test_eval");
  RunConfig cfg = tiny_run(write_dynamics_dataset(dir), dir.file("run"));
  cfg.epochs = 2;
  // evaluation windows must match the training windows for this check
  cfg.windows_per_traj = 2;
  json report = train_run(cfg);
  json eval = evaluate_run(cfg, dir.file("run") + "/checkpoint.json", "train");
  // both are forward passes of the same parameters over seeded windows
  CHECK(eval["metrics"]["mse"].get<double>() > 0.0);

  json eval2 = evaluate_run(cfg, dir.file("run") + "/checkpoint.json", "train");
  CHECK(eval["metrics"] == eval2["metrics"]);
}

TEST_CASE("evaluate: empty split is an error, not an empty report") {
  TempDir dir("equifuse_test_empty");
  // 4 trajectories: 8:1:1 split floors val/test to zero records
  std::string dataset = write_dynamics_dataset(dir, 4);
  RunConfig cfg = tiny_run(dataset, dir.file("run"));
  cfg.epochs = 0;
  train_run(cfg);
  CHECK_THROWS_AS(
      evaluate_run(cfg, dir.file("run") + "/checkpoint.json", "test"),
      DataError);
}

TEST_CASE("evaluate: single-window dataset matches a hand-computed MSE") {
  TempDir dir("equifuse_test_single");
  SpringSystemConfig scfg;
  scfg.n_nodes = 3;
  scfg.n_steps = 10;  // exactly T + F with T=6, F=4: one unique window
  scfg.seed = 99;
  Trajectory traj = gen_spring_system(scfg);
  std::string dataset = dir.file("one.traj.jsonl");
  // ten copies so every split is populated
  save_trajectories(dataset, std::vector<Trajectory>(10, traj));

  RunConfig cfg = tiny_run(dataset, dir.file("run"));
  cfg.windows_per_traj = 1;
  cfg.epochs = 0;
  train_run(cfg);
  json eval = evaluate_run(cfg, dir.file("run") + "/checkpoint.json", "test");

  // identity init: prediction is the last input frame
  std::vector<MatX3> persist(cfg.F, traj.frames[cfg.T - 1]);
  std::vector<MatX3> target(traj.frames.begin() + cfg.T, traj.frames.end());
  CHECK(eval["metrics"]["mse"].get<double>() ==
        doctest::Approx(mse_value(persist, target)).epsilon(1e-10));
}

TEST_CASE("predict: identity checkpoint repeats the last frame; equivariance") {
  TempDir dir("equifuse_test_predict");
  std::string dataset = write_dynamics_dataset(dir, 10, 3, 16);
  RunConfig cfg = tiny_run(dataset, dir.file("run"));
  cfg.T = 4;
  cfg.F = 3;
  cfg.epochs = 0;
  train_run(cfg);

  predict_run(cfg, dir.file("run") + "/checkpoint.json", dataset,
              dir.file("pred.traj.jsonl"));
  auto inputs = load_trajectories(dataset);
  auto preds = load_trajectories(dir.file("pred.traj.jsonl"));
  REQUIRE(preds.size() == inputs.size());
  for (size_t k = 0; k < preds.size(); ++k) {
    REQUIRE(preds[k].n_frames() == 3);
    for (const MatX3& f : preds[k].frames)
      CHECK((f - inputs[k].frames.back()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ablate: seven rows, wiring flags, and distinct config echoes") {
  TempDir dir("equifuse_test_ablate");
  std::string dataset = write_dynamics_dataset(dir, 10, 3, 16);
  RunConfig base = tiny_run(dataset, dir.file("matrix"));
  base.T = 4;
  base.F = 3;
  base.epochs = 1;
  base.windows_per_traj = 1;

  json combined = ablate_run(base, dir.file("matrix"));
  REQUIRE(combined.size() == 7);
  std::set<std::string> echoes;
  for (const json& row : combined) {
    CHECK(row["status"] == "ok");
    json report;
    std::ifstream in(dir.file("matrix") + "/" +
                     row["variant"].get<std::string>() + "/report.json");
    in >> report;
    echoes.insert(report["config"].dump());
  }
  CHECK(echoes.size() == 7);

  // CSV exists with a header and one metric row per variant at least
  std::ifstream csv(dir.file("matrix") + "/ablation.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "variant,seed,metric,value");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows >= 7 * 3);
}

TEST_CASE("ablate: encoder-only row runs without lm or prompt calls") {
  TempDir dir("equifuse_test_ablate_ee");
  std::string dataset = write_dynamics_dataset(dir, 10, 3, 16);
  RunConfig base = tiny_run(dataset, dir.file("m"));
  base.T = 4;
  base.F = 3;
  base.epochs = 1;
  base.windows_per_traj = 1;
  RunConfig row = ablation_row_config(base, "encoder_only");
  row.out_dir = dir.file("m/ee");
  reset_lm_forward_calls();
  reset_prompt_render_calls();
  train_run(row);
  CHECK(lm_forward_calls() == 0);
  CHECK(prompt_render_calls() == 0);

  // w/o statistics keeps <Object> and drops <Statistics>
  RunConfig wos = ablation_row_config(base, "full_no_statistics");
  Model model = Model::create(wos.model_config(1), wos.prompt_spec());
  Rng rng(1);
  GeometricGraph g = testutil::random_graph(4, 1, rng);
  std::string text = model.prompt_text(g);
  CHECK(text.find("<Object>") != std::string::npos);
  CHECK(text.find("<Statistics>") == std::string::npos);
}

TEST_CASE("design task: smoke training run with AAR/RMSD metrics") {
  TempDir dir("equifuse_test_design");
  ResidueSystemConfig rcfg;
  rcfg.n_samples = 10;
  rcfg.n_residues = 4;
  rcfg.seed = 21;
  save_residues(dir.file("res.res.jsonl"), gen_residue_system(rcfg));

  RunConfig cfg = tiny_run(dir.file("res.res.jsonl"), dir.file("run"));
  cfg.task = "design";
  cfg.F = 1;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  json report = train_run(cfg);
  CHECK(report["metrics"]["train"].contains("aar"));
  CHECK(report["metrics"]["train"].contains("rmsd"));
  CHECK(report["final_train_loss"].get<double>() <
        report["initial_train_loss"].get<double>());
}
