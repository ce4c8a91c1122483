#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

struct VisionConfig {
  int image_size = 32;  // H = W
  int channels = 3;
  int patch_size = 8;
  int layers = 4;
  int heads = 4;
  int mlp_ratio = 4;
};

struct TextConfig {
  int vocab_size = 0;  // 0 = take from tokenizer
  int max_tokens = 16;
  int layers = 4;
  int heads = 4;
  int mlp_ratio = 4;
};

struct ModelConfig {
  int embed_dim = 64;
  VisionConfig vision;
  TextConfig text;
  uint64_t seed = 1;

  int patches_per_frame() const {
    int g = vision.image_size / vision.patch_size;
    return g * g;
  }
  int patch_dim() const {
    return vision.patch_size * vision.patch_size * vision.channels;
  }
  void validate() const;
};

struct PromptConfig {
  int n_vision_tokens = 8;
  int n_text_tokens = 8;
  int depth = 4;  // layers receiving fresh prompts, from the input
  double init_std = 0.02;

  bool empty() const { return n_vision_tokens == 0 && n_text_tokens == 0; }
  void validate(const ModelConfig& model) const;
};

struct DataConfig {
  uint64_t seed = 1;
  int t_raw = 32;
  int h_raw = 40;
  int w_raw = 40;
  int channels = 3;
  double noise = 0.05;
  int train_per_class = 16;
  int val_per_class = 12;
  std::vector<std::string> families = {"appearance", "compositional", "trajectory"};

  void validate() const;
};

struct TrainConfig {
  std::string regime = "full_ft";  // full_ft|image_ft|text_ft|prompt_only|frozen
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.0;  // 0 = regime default (5e-4; 5e-3 for prompt_only)
  double weight_decay = 0.001;
  std::string fusion = "embedding";  // embedding|decision|image
  int frames = 8;
  uint64_t seed = 1;
  std::string source_manifest;
  std::string stage1_checkpoint;

  double resolved_lr() const {
    if (learning_rate > 0.0) return learning_rate;
    return regime == "prompt_only" ? 5e-3 : 5e-4;
  }
  void validate() const;
};

struct ProtocolConfig {
  std::string setting = "zero_shot";  // zero_shot|base_to_novel|few_shot|fully_supervised
  int k = 16;
  int frames = 8;
  int spatial_crops = 1;
  int temporal_clips = 1;
  int crop_size = 32;
  uint64_t seed = 1;
  std::vector<std::string> target_classes = {
      "circle with square", "square with diamond", "triangle with diamond"};

  void validate() const;
};

// One run-config document: sections {model, data, train, protocol, prompts}.
struct RunConfig {
  ModelConfig model;
  DataConfig data;
  TrainConfig train;
  ProtocolConfig protocol;
  PromptConfig prompts;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& c);

// Content digest of the canonical serialized config, used to key outputs.
std::string config_hash(const RunConfig& c);

// Section-level serialization (used by the checkpoint header).
std::string model_config_to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const std::string& text);
std::string prompt_config_to_json(const PromptConfig& p);
PromptConfig prompt_config_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace vtc
