#include "vtc/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "vtc/prompting.hpp"
#include "vtc/rng.hpp"

namespace vtc {

namespace {
constexpr double kBeta1 = 0.9, kBeta2 = 0.98, kEps = 1e-8;
constexpr double kClipNorm = 1.0;
constexpr double kWarmupFrac = 0.1;
const double kMaxLogitScale = std::log(100.0);

bool starts_with(const std::string& s, const std::string& p) {
  return s.rfind(p, 0) == 0;
}
bool ends_with(const std::string& s, const std::string& p) {
  return s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0;
}
}  // namespace

FreezeMask regime_mask(const std::string& regime, const ParameterStore& params) {
  if (regime == "full_ft") {
    return FreezeMask{[](const std::string&) { return true; }};
  }
  if (regime == "image_ft") {
    return FreezeMask{[](const std::string& n) {
      return starts_with(n, "vision.") || n == "logit_scale";
    }};
  }
  if (regime == "text_ft") {
    return FreezeMask{[](const std::string& n) {
      return starts_with(n, "text.") || n == "logit_scale";
    }};
  }
  if (regime == "prompt_only") return freeze_base(params);
  if (regime == "frozen") {
    return FreezeMask{[](const std::string&) { return false; }};
  }
  throw ConfigError("train.regime: unknown regime '" + regime + "'");
}

double scheduled_lr(double base_lr, int step, int total_steps) {
  if (total_steps <= 0) throw ConfigError("scheduled_lr: total_steps must be > 0");
  int warmup = std::max(1, static_cast<int>(kWarmupFrac * total_steps));
  if (step < warmup) return base_lr * (step + 1) / warmup;
  if (total_steps == warmup) return base_lr;
  double u = static_cast<double>(step - warmup) /
             static_cast<double>(total_steps - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(u * 3.14159265358979323846));
}

bool decay_exempt(const std::string& name) {
  return name == "logit_scale" || ends_with(name, ".bias") ||
         starts_with(name, "prompt.");
}

AdamW::AdamW(double lr, double weight_decay) : lr_(lr), wd_(weight_decay) {}

void AdamW::step(ParameterStore& params, const std::map<std::string, Tensor>& grads,
                 double lr_now) {
  ++t_;
  double bc1 = 1.0 - std::pow(kBeta1, t_);
  double bc2 = 1.0 - std::pow(kBeta2, t_);
  for (const auto& [name, g] : grads) {
    auto& entry = params.entry_mut(name);
    size_t n = entry.values.size();
    if (g.data.size() != n)
      throw ShapeError("AdamW: gradient shape mismatch for '" + name + "'");
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
    double wd = decay_exempt(name) ? 0.0 : wd_;
    for (size_t i = 0; i < n; ++i) {
      double gi = g.data[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
      double theta = static_cast<double>(entry.values[i]);
      double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
      theta -= lr_now * (update + wd * theta);
      entry.values[i] = static_cast<float>(theta);
    }
  }
}

TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::map<int, std::vector<int>>& train_samples,
                  double lr_override) {
  if (cfg.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train_samples.empty()) throw DataError("train: empty sample map");
  FreezeMask mask = regime_mask(cfg.regime, model.params);
  std::vector<std::string> trainable = mask.trainable_names(model.params);
  FusionMode fusion = parse_fusion_mode(cfg.fusion);
  double base_lr = lr_override >= 0.0 ? lr_override : cfg.resolved_lr();

  // fixed sample roster (class-major), shuffled per epoch
  struct Item {
    int class_id, index;
  };
  std::vector<Item> roster;
  for (const auto& [cid, idxs] : train_samples)
    for (int i : idxs) roster.push_back({cid, i});

  // pre-tokenized prompt per class
  std::map<int, TokenSequence> class_seq;
  for (const auto& [cid, _] : train_samples) {
    const ClassSpec& spec = ds.manifest.classes[static_cast<size_t>(ds.class_slot(cid))];
    class_seq.emplace(
        cid, tokenize(render_prompt(to_lower(spec.name),
                                    to_lower(model.vocab.prompt_template)),
                      model.vocab));
  }

  int t = cfg.frames;
  int crop = model.config.vision.image_size;
  int steps_per_epoch =
      (static_cast<int>(roster.size()) + cfg.batch_size - 1) / cfg.batch_size;
  int total_steps = cfg.epochs * steps_per_epoch;

  AdamW opt(base_lr, cfg.weight_decay);
  TrainResult result;
  int global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Item> order = roster;
    Rng shuffle_rng(cfg.seed, "epoch" + std::to_string(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.uniform_int(i));
      std::swap(order[i - 1], order[j]);
    }

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t stop = std::min(order.size(), start + cfg.batch_size);
      int b = static_cast<int>(stop - start);

      Tensor rows({b * t, crop * crop * ds.manifest.gen.channels});
      std::vector<TokenSequence> seqs;
      seqs.reserve(static_cast<size_t>(b));
      for (int bi = 0; bi < b; ++bi) {
        const Item& it = order[start + bi];
        const VideoSample& v = ds.train_sample(it.class_id, it.index);
        uint64_t vseed =
            mix64(cfg.seed, static_cast<uint64_t>(epoch), fnv1a64(v.video_id));
        std::vector<int> fidx = sparse_frame_indices(v.t_raw, t, true, vseed);
        Rng crop_rng(vseed, "crop");
        int oy = static_cast<int>(crop_rng.uniform_int(
            static_cast<uint64_t>(v.h - crop + 1)));
        int ox = static_cast<int>(crop_rng.uniform_int(
            static_cast<uint64_t>(v.w - crop + 1)));
        Tensor clip = crop_clip(v, fidx, oy, ox, crop);
        std::copy(clip.data.begin(), clip.data.end(), rows.row_ptr(bi * t));
        seqs.push_back(class_seq.at(it.class_id));
      }

      Graph g;
      ModelForward fwd(g, model.params, model.config, model.prompt_ptr());
      int frame_emb = fwd.encode_frames(rows);
      int text_emb = fwd.encode_text(seqs);
      int logits = build_fused_logits(g, frame_emb, text_emb, fwd.logit_scale(), t,
                                      fusion);
      std::vector<int> targets;  // row i's positive is its own video's column
      if (fusion == FusionMode::image) {
        targets.resize(static_cast<size_t>(b) * t);
        for (int i = 0; i < b * t; ++i) targets[static_cast<size_t>(i)] = i / t;
      } else {
        targets.resize(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) targets[static_cast<size_t>(i)] = i;
      }
      int loss_id = g.ce_mean(logits, targets);
      double loss = g.val(loss_id).data[0];

      double lr_now = scheduled_lr(base_lr, global_step, total_steps);
      double grad_norm = 0.0;
      if (!trainable.empty()) {
        g.backward(loss_id);
        std::map<std::string, Tensor> grads;
        for (const std::string& name : trainable) {
          auto it = fwd.leaves().find(name);
          if (it == fwd.leaves().end()) continue;  // unused this step
          grads.emplace(name, g.grad(it->second));
        }
        double sq = 0.0;
        for (const auto& [_, gt] : grads)
          for (double x : gt.data) sq += x * x;
        grad_norm = std::sqrt(sq);
        if (grad_norm > kClipNorm) {
          double s = kClipNorm / grad_norm;
          for (auto& [_, gt] : grads)
            for (double& x : gt.data) x *= s;
        }
        opt.step(model.params, grads, lr_now);
        auto& scale = model.params.entry_mut("logit_scale");
        scale.values[0] =
            std::min(scale.values[0], static_cast<float>(kMaxLogitScale));
      }

      StepLog log{epoch, global_step, loss, lr_now, grad_norm,
                  static_cast<double>(model.params.entry("logit_scale").values[0])};
      if (!std::isfinite(loss)) {
        throw DataError(
            "training diverged: non-finite loss at epoch " + std::to_string(epoch) +
            " step " + std::to_string(global_step) + " (lr=" + std::to_string(lr_now) +
            ", grad_norm=" + std::to_string(grad_norm) +
            ", logit_scale=" + std::to_string(log.logit_scale) + ")");
      }
      result.curve.push_back(log);
      result.final_loss = loss;
      ++global_step;
    }
  }
  result.steps = global_step;
  return result;
}

BridgeResult bridge_and_prompt(Model& model, const Dataset& ds,
                               const TrainConfig& stage1_cfg,
                               const TrainConfig& stage2_cfg,
                               const PromptConfig& prompts,
                               const std::map<int, std::vector<int>>& stage2_samples) {
  if (stage1_cfg.regime == "prompt_only")
    throw ConfigError("bridge: stage 1 must tune the base model, not prompts");
  if (stage2_cfg.regime != "prompt_only")
    throw ConfigError("bridge: stage 2 must use the prompt_only regime");
  if (model.prompted)
    throw ConfigError("bridge: model already carries prompt banks");

  BridgeResult r;
  std::map<int, std::vector<int>> all;
  std::vector<int> every(static_cast<size_t>(ds.manifest.gen.train_per_class));
  for (int i = 0; i < ds.manifest.gen.train_per_class; ++i)
    every[static_cast<size_t>(i)] = i;
  for (const ClassSpec& c : ds.manifest.classes) all[c.class_id] = every;
  r.stage1 = train(model, ds, stage1_cfg, all);

  attach_prompts(model.params, prompts, model.config, stage2_cfg.seed);
  model.prompts = prompts;
  model.prompted = true;
  validate_prompted_vocab(model.vocab, class_names(ds.manifest.classes), prompts);

  r.stage2 = train(model, ds, stage2_cfg, stage2_samples);
  return r;
}

}  // namespace vtc
