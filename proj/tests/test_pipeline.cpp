#include <doctest.h>

#include "equifuse/pipeline.hpp"
#include "helpers.hpp"

using namespace equifuse;
using testutil::random_coords;
using testutil::random_matrix;

namespace {

ModelConfig small_config(Variant variant = Variant::full) {
  ModelConfig cfg;
  cfg.task = TaskKind::dynamics;
  cfg.t_in = 4;
  cfg.f_out = 3;
  cfg.feature_width = 1;
  cfg.hidden = 12;
  cfg.encoder_layers = 2;
  cfg.lm.d_model = 8;
  cfg.lm.n_blocks = 1;
  cfg.lm.n_heads = 2;
  cfg.lm.max_seq_len = 256;
  cfg.lm.ffn_width = 16;
  cfg.variant = variant;
  cfg.seed = 2024;
  return cfg;
}

struct Instance {
  GeometricGraph skeleton;
  std::vector<MatX3> window;
};

Instance random_instance(int n, int t, Rng& rng) {
  Instance inst;
  inst.skeleton.features = Mat::Ones(n, 1);
  inst.skeleton.edges = random_connected_edges(n, 3.0, rng);
  MatX3 x = random_coords(n, rng);
  for (int k = 0; k < t; ++k) {
    inst.window.push_back(x);
    x += MatX3(random_matrix(n, 3, rng, 0.08));
  }
  inst.skeleton.coords = inst.window.front();
  return inst;
}

std::vector<MatX3> transform_window(const std::vector<MatX3>& window,
                                    const TransformE3& tf) {
  std::vector<MatX3> out;
  for (const MatX3& f : window) out.push_back(tf.apply(f));
  return out;
}

// Kick every zero-initialized coordinate head and the output projection so
// the pipeline is not the identity.
void kick_model_paths(std::vector<ParamGroup>& groups, Rng& rng) {
  for (ParamGroup& g : groups) {
    if (g.frozen) continue;
    for (NamedTensor& p : g.tensors) {
      Vec& v = p.tensor.value_mut();
      if (v.cwiseAbs().maxCoeff() == 0.0)
        for (Eigen::Index k = 0; k < v.size(); ++k)
          v[k] = rng.normal() * 0.05;
    }
  }
}

}  // namespace

TEST_CASE("pipeline: identity at initialization for every variant") {
  Rng rng(120);
  for (Variant variant :
       {Variant::full, Variant::encoder_only, Variant::llm_then_encoder,
        Variant::llm_no_prompt_then_encoder}) {
    Model model = Model::create(small_config(variant));
    Instance inst = random_instance(5, 4, rng);
    std::vector<MatX3> pred = model.predict_frames(inst.skeleton, inst.window);
    REQUIRE(pred.size() == 3);
    for (const MatX3& f : pred)
      CHECK((f - inst.window.back()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pipeline: end-to-end E(3) equivariance after perturbation") {
  Rng rng(121);
  for (Variant variant :
       {Variant::full, Variant::encoder_only, Variant::llm_then_encoder}) {
    CAPTURE(static_cast<int>(variant));
    Model model = Model::create(small_config(variant));
    std::vector<ParamGroup> groups = model.param_groups();
    Rng kick(500 + static_cast<std::uint64_t>(variant));
    kick_model_paths(groups, kick);

    Instance inst = random_instance(5, 4, rng);
    for (int it = 0; it < 5; ++it) {
      TransformE3 tf = TransformE3::random(rng, it % 2 == 0);
      std::vector<MatX3> base = model.predict_frames(inst.skeleton, inst.window);
      GeometricGraph moved_skel = apply_transform(inst.skeleton, tf);
      std::vector<MatX3> moved =
          model.predict_frames(moved_skel, transform_window(inst.window, tf));
      for (size_t f = 0; f < base.size(); ++f)
        CHECK((moved[f] - tf.apply(base[f])).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("pipeline: invariant features under transforms (full variant)") {
  Rng rng(122);
  Model model = Model::create(small_config(Variant::full));
  std::vector<ParamGroup> groups = model.param_groups();
  Rng kick(501);
  kick_model_paths(groups, kick);
  Instance inst = random_instance(5, 4, rng);
  DynamicsOutput base = model.forward_dynamics(inst.skeleton, inst.window);
  for (int it = 0; it < 5; ++it) {
    TransformE3 tf = TransformE3::random(rng, it % 2 == 1);
    DynamicsOutput moved = model.forward_dynamics(
        apply_transform(inst.skeleton, tf), transform_window(inst.window, tf));
    CHECK(testutil::max_abs_diff(moved.feats.value_matrix(),
                                 base.feats.value_matrix()) <= 1e-8);
  }
}

TEST_CASE("pipeline: full-model gradient check on a miniature instance") {
  Rng rng(123);
  ModelConfig cfg = small_config(Variant::full);
  cfg.t_in = 3;
  cfg.f_out = 2;
  cfg.encoder_layers = 1;
  cfg.hidden = 6;
  Model model = Model::create(cfg);
  Instance inst = random_instance(4, 3, rng);
  std::vector<MatX3> target;
  for (int f = 0; f < 2; ++f)
    target.push_back(inst.window.back() +
                     MatX3(random_matrix(4, 3, rng, 0.1)));

  auto loss_fn = [&]() {
    DynamicsOutput out = model.forward_dynamics(inst.skeleton, inst.window);
    return mse_loss(out.frames, target);
  };
  std::vector<ParamGroup> groups = model.param_groups();
  zero_grad(groups);
  backward(loss_fn());
  materialize_missing_grads(groups);

  // a representative parameter from each trainable group
  double worst = 0.0;
  for (ParamGroup& g : groups) {
    if (g.frozen) continue;
    for (size_t i = 0; i < g.tensors.size(); i += 3) {
      double err = finite_diff_check([&]() { return loss_fn().item(); },
                                     g.tensors[i].tensor, 1e-6);
      worst = std::max(worst, err);
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("pipeline: prompt ablation flags shape the rendered text") {
  ModelConfig cfg = small_config(Variant::full);
  Rng rng(124);
  Instance inst = random_instance(4, 4, rng);
  inst.skeleton.coords = inst.window.back();

  cfg.use_object = false;
  Model no_object = Model::create(cfg);
  std::string text = no_object.prompt_text(inst.skeleton);
  CHECK(text.find("<Object>") == std::string::npos);
  CHECK(text.find("<Statistics>") != std::string::npos);

  cfg.use_object = true;
  cfg.use_statistics = false;
  Model no_stats = Model::create(cfg);
  text = no_stats.prompt_text(inst.skeleton);
  CHECK(text.find("<Object>") != std::string::npos);
  CHECK(text.find("<Statistics>") == std::string::npos);
}

TEST_CASE("pipeline: encoder-only variant never touches lm or promptkit") {
  Rng rng(125);
  Model model = Model::create(small_config(Variant::encoder_only));
  Instance inst = random_instance(5, 4, rng);
  reset_lm_forward_calls();
  reset_prompt_render_calls();
  model.predict_frames(inst.skeleton, inst.window);
  CHECK(lm_forward_calls() == 0);
  CHECK(prompt_render_calls() == 0);
}

TEST_CASE("pipeline: no-prompt variants run the lm without rendering") {
  Rng rng(126);
  Instance inst = random_instance(5, 4, rng);
  for (Variant variant :
       {Variant::llm_no_prompt_then_encoder, Variant::full}) {
    ModelConfig cfg = small_config(variant);
    cfg.use_prompt = variant == Variant::llm_no_prompt_then_encoder;
    Model model = Model::create(cfg);
    reset_lm_forward_calls();
    reset_prompt_render_calls();
    model.predict_frames(inst.skeleton, inst.window);
    CHECK(lm_forward_calls() == 1);
    CHECK(prompt_render_calls() == 0);
  }
}

TEST_CASE("pipeline: frozen lm group is identified and last") {
  Model model = Model::create(small_config(Variant::full));
  std::vector<ParamGroup> groups = model.param_groups();
  REQUIRE(!groups.empty());
  CHECK(groups.back().name == "lm");
  CHECK(groups.back().frozen);
  for (size_t g = 0; g + 1 < groups.size(); ++g) CHECK(!groups[g].frozen);
}

TEST_CASE("pipeline: design forward yields normalized probability rows") {
  ResidueSystemConfig dcfg;
  dcfg.n_samples = 1;
  dcfg.n_residues = 5;
  dcfg.seed = 17;
  ResidueStructure rs = gen_residue_system(dcfg)[0];

  ModelConfig cfg = small_config(Variant::full);
  cfg.task = TaskKind::design;
  cfg.t_in = 1;
  cfg.f_out = 1;
  cfg.feature_width = kResidueFeatureWidth;
  Model model = Model::create(cfg);
  Mat probs;
  ResidueStructure pred = model.predict_design(rs, &probs);
  REQUIRE(probs.rows() == 5);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    CHECK(std::abs(probs.row(r).sum() - 1.0) <= 1e-10);
    CHECK(probs.row(r).minCoeff() >= 0.0);
  }
  // identity start: backbone prediction equals the input backbone
  CHECK((stack_backbone(pred) - stack_backbone(rs)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("pipeline: design equivariance of predicted backbone") {
  ResidueSystemConfig dcfg;
  dcfg.n_samples = 1;
  dcfg.n_residues = 4;
  dcfg.seed = 18;
  ResidueStructure rs = gen_residue_system(dcfg)[0];

  ModelConfig cfg = small_config(Variant::full);
  cfg.task = TaskKind::design;
  cfg.t_in = 1;
  cfg.f_out = 1;
  cfg.feature_width = kResidueFeatureWidth;
  Model model = Model::create(cfg);
  std::vector<ParamGroup> groups = model.param_groups();
  Rng kick(502);
  kick_model_paths(groups, kick);

  Rng rng(127);
  Mat base_probs;
  ResidueStructure base = model.predict_design(rs, &base_probs);
  for (int it = 0; it < 5; ++it) {
    TransformE3 tf = TransformE3::random(rng, it % 2 == 0);
    Mat moved_probs;
    ResidueStructure moved = model.predict_design(apply_transform(rs, tf),
                                                  &moved_probs);
    CHECK((stack_backbone(moved) - tf.apply(MatX3(stack_backbone(base))))
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
    CHECK(testutil::max_abs_diff(moved_probs, base_probs) <= 1e-8);
  }
}

TEST_CASE("pipeline: layout order does not change h_llm (bidirectional)") {
  Rng rng(128);
  ModelConfig cfg = small_config(Variant::full);
  Instance inst = random_instance(4, 4, rng);
  cfg.layout = SequenceOrder::features_first;
  Model a = Model::create(cfg);
  cfg.layout = SequenceOrder::prompt_first;
  Model b = Model::create(cfg);
  std::vector<MatX3> pa = a.predict_frames(inst.skeleton, inst.window);
  std::vector<MatX3> pb = b.predict_frames(inst.skeleton, inst.window);
  for (size_t f = 0; f < pa.size(); ++f)
    CHECK((pa[f] - pb[f]).cwiseAbs().maxCoeff() <= 1e-10);
}
