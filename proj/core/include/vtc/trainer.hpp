#pragma once

#include <map>
#include <string>
#include <vector>

#include "vtc/protocols.hpp"

namespace vtc {

struct StepLog {
  int epoch = 0;
  int step = 0;  // global step index, 0-based
  double loss = 0;
  double lr = 0;
  double grad_norm = 0;     // pre-clip global norm over trainable parameters
  double logit_scale = 0;   // value after the step
};

struct TrainResult {
  std::vector<StepLog> curve;
  double final_loss = 0;
  int steps = 0;
};

// Classify every parameter as trainable or frozen for the given regime.
FreezeMask regime_mask(const std::string& regime, const ParameterStore& params);

// Linear warmup over the first 10% of steps, then cosine decay to zero.
double scheduled_lr(double base_lr, int step, int total_steps);

// Decoupled-weight-decay Adam over a ParameterStore subset.  Moments are kept
// in double; parameters round-trip through their float32 storage each step.
class AdamW {
 public:
  AdamW(double lr, double weight_decay);

  // One update from per-name gradients; names absent from grads are untouched.
  // `lr_now` overrides the constructor lr for this step (schedules).
  void step(ParameterStore& params, const std::map<std::string, Tensor>& grads,
            double lr_now);

  double lr() const { return lr_; }

 private:
  double lr_, wd_;
  int t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

// True for parameters excluded from weight decay: the temperature scalar,
// biases, and prompt banks.
bool decay_exempt(const std::string& name);

// Optimize model.params in place on the given train subset
// (class_id -> train indices).  lr_override >= 0 forces that exact rate,
// bypassing cfg.resolved_lr(); pass 0 for a pure evaluation walk.
TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::map<int, std::vector<int>>& train_samples,
                  double lr_override = -1.0);

struct BridgeResult {
  TrainResult stage1, stage2;
};

// Stage 1: full fine-tune on all source train data.  Then attach prompt banks
// and run stage 2 with everything but the prompts frozen, on the stage-2
// subset (typically K-shot).
BridgeResult bridge_and_prompt(Model& model, const Dataset& ds,
                               const TrainConfig& stage1_cfg,
                               const TrainConfig& stage2_cfg,
                               const PromptConfig& prompts,
                               const std::map<int, std::vector<int>>& stage2_samples);

}  // namespace vtc
