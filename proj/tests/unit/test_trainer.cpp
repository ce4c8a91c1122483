#include <cmath>
#include <limits>

#include "doctest.h"
#include "vtc/prompting.hpp"
#include "vtc/trainer.hpp"

using namespace vtc;

namespace {

Dataset small_dataset() {
  DataConfig cfg;
  cfg.seed = 21;
  cfg.t_raw = 8;
  cfg.noise = 0.02;
  cfg.train_per_class = 4;
  cfg.val_per_class = 1;
  cfg.families = {"trajectory"};
  return generate_dataset(cfg);
}

Model small_model(const Dataset& ds, uint64_t seed = 3) {
  Model m;
  m.vocab = build_tokenizer(class_names(ds.manifest.classes), kDefaultPromptTemplate, 12);
  m.config.embed_dim = 16;
  m.config.vision.image_size = 32;
  m.config.vision.patch_size = 8;
  m.config.vision.layers = 1;
  m.config.vision.heads = 2;
  m.config.vision.mlp_ratio = 2;
  m.config.text.layers = 1;
  m.config.text.heads = 2;
  m.config.text.mlp_ratio = 2;
  m.config.text.max_tokens = 12;
  m.config.text.vocab_size = m.vocab.size();
  m.config.seed = seed;
  m.params = init_dual_encoder(m.config);
  return m;
}

TrainConfig quick_train(const std::string& regime, int epochs) {
  TrainConfig cfg;
  cfg.regime = regime;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.frames = 2;
  cfg.seed = 5;
  return cfg;
}

std::map<int, std::vector<int>> all_samples(const Dataset& ds) {
  std::map<int, std::vector<int>> out;
  for (const ClassSpec& c : ds.manifest.classes) {
    for (int i = 0; i < ds.manifest.gen.train_per_class; ++i)
      out[c.class_id].push_back(i);
  }
  return out;
}

}  // namespace

TEST_CASE("regime masks select the advertised parameter subsets") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);

  FreezeMask full = regime_mask("full_ft", m.params);
  FreezeMask image = regime_mask("image_ft", m.params);
  FreezeMask text = regime_mask("text_ft", m.params);
  FreezeMask frozen = regime_mask("frozen", m.params);

  for (const std::string& n : m.params.names()) {
    CHECK(full.trainable(n));
    CHECK_FALSE(frozen.trainable(n));
    bool is_vision = n.rfind("vision.", 0) == 0;
    bool is_text = n.rfind("text.", 0) == 0;
    CHECK(image.trainable(n) == (is_vision || n == "logit_scale"));
    CHECK(text.trainable(n) == (is_text || n == "logit_scale"));
  }

  CHECK_THROWS_AS(regime_mask("prompt_only", m.params), ConfigError);  // no banks yet
  attach_prompts(m.params, PromptConfig{2, 2, 1, 0.02}, m.config, 1);
  FreezeMask prompt = regime_mask("prompt_only", m.params);
  for (const std::string& n : m.params.names())
    CHECK(prompt.trainable(n) == is_prompt_name(n));

  CHECK_THROWS_AS(regime_mask("partial", m.params), ConfigError);
}

TEST_CASE("learning-rate schedule warms up then decays to zero") {
  double base = 0.02;
  CHECK(scheduled_lr(base, 0, 100) == doctest::Approx(base * 0.1).epsilon(1e-12));
  CHECK(scheduled_lr(base, 4, 100) == doctest::Approx(base * 0.5).epsilon(1e-12));
  CHECK(scheduled_lr(base, 9, 100) == doctest::Approx(base).epsilon(1e-12));
  CHECK(scheduled_lr(base, 10, 100) == doctest::Approx(base).epsilon(1e-12));
  for (int s = 1; s < 10; ++s)
    CHECK(scheduled_lr(base, s, 100) > scheduled_lr(base, s - 1, 100));
  for (int s = 11; s < 100; ++s)
    CHECK(scheduled_lr(base, s, 100) < scheduled_lr(base, s - 1, 100));
  CHECK(scheduled_lr(base, 99, 100) < 0.01 * base);
  CHECK(scheduled_lr(base, 99, 100) > 0.0);

  // tiny runs: one warmup step, and a single-step run never decays
  CHECK(scheduled_lr(base, 0, 5) == doctest::Approx(base).epsilon(1e-12));
  CHECK(scheduled_lr(base, 0, 1) == doctest::Approx(base).epsilon(1e-12));
  CHECK_THROWS_AS(scheduled_lr(base, 0, 0), ConfigError);
}

TEST_CASE("weight decay exemptions") {
  CHECK(decay_exempt("logit_scale"));
  CHECK(decay_exempt("vision.layers.0.attn.q.bias"));
  CHECK(decay_exempt("prompt.text.2"));
  CHECK_FALSE(decay_exempt("vision.layers.0.attn.q.weight"));
  CHECK_FALSE(decay_exempt("vision.layers.0.ln1.gain"));  // gains do decay
  CHECK_FALSE(decay_exempt("text.token_embed"));
}

TEST_CASE("optimizer follows a constant-gradient oracle") {
  ParameterStore ps;
  ps.add("w", {1});
  AdamW opt(0.1, 0.0);
  std::map<std::string, Tensor> grads;
  grads.emplace("w", Tensor::full({1}, 1.0));
  for (int step = 1; step <= 3; ++step) {
    opt.step(ps, grads, 0.1);
    // bias-corrected moments make each unit-gradient step move by almost exactly lr
    CHECK(ps.as_tensor("w").data[0] == doctest::Approx(-0.1 * step).epsilon(1e-6));
  }
}

TEST_CASE("optimizer applies decoupled decay only to non-exempt names") {
  ParameterStore ps;
  ps.add("dense.weight", {1});
  ps.add("dense.bias", {1});
  ps.entry_mut("dense.weight").values[0] = 2.0f;
  ps.entry_mut("dense.bias").values[0] = 2.0f;
  AdamW opt(0.5, 0.1);
  std::map<std::string, Tensor> grads;
  grads.emplace("dense.weight", Tensor::zeros({1}));
  grads.emplace("dense.bias", Tensor::zeros({1}));
  opt.step(ps, grads, 0.5);
  CHECK(ps.as_tensor("dense.weight").data[0] == doctest::Approx(1.9).epsilon(1e-6));
  CHECK(ps.as_tensor("dense.bias").data[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("optimizer leaves absent names alone and checks shapes") {
  ParameterStore ps;
  ps.add("a", {2});
  ps.add("b", {2});
  ps.entry_mut("b").values = {1.0f, -1.0f};
  AdamW opt(0.1, 0.0);
  std::map<std::string, Tensor> grads;
  grads.emplace("a", Tensor::full({2}, 1.0));
  opt.step(ps, grads, 0.1);
  CHECK(ps.entry("b").values == std::vector<float>{1.0f, -1.0f});

  std::map<std::string, Tensor> bad;
  bad.emplace("a", Tensor::full({3}, 1.0));
  CHECK_THROWS_AS(opt.step(ps, bad, 0.1), ShapeError);

  // zero learning rate with zero decay is a strict no-op on values
  ParameterStore before = ps;
  opt.step(ps, grads, 0.0);
  CHECK(ps == before);
}

TEST_CASE("training is bitwise deterministic in its seed") {
  Dataset ds = small_dataset();
  Model a = small_model(ds);
  Model b = small_model(ds);
  TrainConfig cfg = quick_train("full_ft", 2);
  TrainResult ra = train(a, ds, cfg, all_samples(ds), 1e-3);
  TrainResult rb = train(b, ds, cfg, all_samples(ds), 1e-3);
  CHECK(a.params == b.params);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].loss == rb.curve[i].loss);
    CHECK(ra.curve[i].grad_norm == rb.curve[i].grad_norm);
    CHECK(ra.curve[i].lr == rb.curve[i].lr);
  }
  CHECK(ra.steps == 2 * 2);  // 16 videos / batch 8, 2 epochs
  CHECK(ra.final_loss == ra.curve.back().loss);
}

TEST_CASE("frozen training walks the data without touching parameters") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  ParameterStore before = m.params;
  TrainResult r = train(m, ds, quick_train("frozen", 1), all_samples(ds));
  CHECK(m.params == before);
  REQUIRE(r.curve.size() == 2);
  for (const StepLog& s : r.curve) {
    CHECK(s.grad_norm == 0.0);
    CHECK(s.loss > 0.0);
  }
}

TEST_CASE("zero learning-rate override keeps parameters but reports gradients") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  ParameterStore before = m.params;
  TrainResult r = train(m, ds, quick_train("full_ft", 1), all_samples(ds), 0.0);
  CHECK(m.params == before);
  for (const StepLog& s : r.curve) {
    CHECK(s.lr == 0.0);
    CHECK(s.grad_norm > 0.0);
  }
}

TEST_CASE("single-tower regimes leave the other tower bit-identical") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  ParameterStore before = m.params;
  train(m, ds, quick_train("image_ft", 1), all_samples(ds), 1e-3);
  bool vision_moved = false;
  for (const std::string& n : m.params.names()) {
    if (n.rfind("text.", 0) == 0) {
      CHECK(m.params.entry(n).values == before.entry(n).values);
    } else if (n.rfind("vision.", 0) == 0) {
      if (!(m.params.entry(n).values == before.entry(n).values)) vision_moved = true;
    }
  }
  CHECK(vision_moved);
}

TEST_CASE("loss drops over a short optimization run") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  TrainConfig cfg = quick_train("full_ft", 4);
  TrainResult r = train(m, ds, cfg, all_samples(ds), 2e-3);
  REQUIRE(r.curve.size() == 8);
  double first_epoch = (r.curve[0].loss + r.curve[1].loss) / 2;
  double last_epoch = (r.curve[6].loss + r.curve[7].loss) / 2;
  CHECK(last_epoch < first_epoch);
}

TEST_CASE("temperature scale never exceeds its cap during training") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  // start just under the cap with an aggressive rate
  m.params.entry_mut("logit_scale").values[0] = 4.6f;
  train(m, ds, quick_train("full_ft", 2), all_samples(ds), 5e-2);
  CHECK(m.params.entry("logit_scale").values[0] <=
        static_cast<float>(std::log(100.0)) + 1e-7f);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  auto& proj = m.params.entry_mut("vision.proj").values;
  proj[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(train(m, ds, quick_train("full_ft", 1), all_samples(ds), 1e-3),
                  DataError);
}

TEST_CASE("training rejects empty sample maps") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  CHECK_THROWS_AS(train(m, ds, quick_train("full_ft", 1), {}), DataError);
}

TEST_CASE("two-stage adaptation freezes the bridged base") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  TrainConfig stage1 = quick_train("full_ft", 1);
  TrainConfig stage2 = quick_train("prompt_only", 1);
  stage2.seed = 9;
  PromptConfig prompts{2, 2, 1, 0.02};

  auto shots = sample_k_shot(ds.manifest, 2, 31, 1);
  BridgeResult r = bridge_and_prompt(m, ds, stage1, stage2, prompts, shots);
  CHECK(r.stage1.steps == 2);
  CHECK(r.stage2.steps == 1);  // 4 classes x 2 shots = 8 = one batch
  CHECK(m.prompted);

  // prompt banks exist and the base stayed where stage 1 left it
  CHECK(m.params.has("prompt.vision.0"));
  CHECK(m.params.has("prompt.text.0"));

  Model base_check = small_model(ds);
  TrainResult only_stage1 = train(base_check, ds, stage1, all_samples(ds));
  for (const std::string& n : base_check.params.names())
    CHECK(m.params.entry(n).values == base_check.params.entry(n).values);
  CHECK(only_stage1.steps == r.stage1.steps);
}

TEST_CASE("two-stage adaptation validates its regimes") {
  Dataset ds = small_dataset();
  Model m = small_model(ds);
  PromptConfig prompts{2, 2, 1, 0.02};
  auto shots = sample_k_shot(ds.manifest, 2, 31, 1);

  TrainConfig p = quick_train("prompt_only", 1);
  TrainConfig f = quick_train("full_ft", 1);
  CHECK_THROWS_AS(bridge_and_prompt(m, ds, p, p, prompts, shots), ConfigError);
  CHECK_THROWS_AS(bridge_and_prompt(m, ds, f, f, prompts, shots), ConfigError);

  m.prompted = true;
  m.prompts = prompts;
  CHECK_THROWS_AS(bridge_and_prompt(m, ds, f, p, prompts, shots), ConfigError);
}
