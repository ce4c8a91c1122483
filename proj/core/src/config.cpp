#include "vtc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vtc/digest.hpp"
#include <json.hpp>

namespace vtc {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(path + "." + it.key() + ": unknown key");
  }
}

template <typename T>
void get_to(const json& j, const std::string& path, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

void parse_vision(const json& j, VisionConfig& v) {
  check_keys(j, "model.vision",
             {"image_size", "channels", "patch_size", "layers", "heads", "mlp_ratio"});
  get_to(j, "model.vision", "image_size", v.image_size);
  get_to(j, "model.vision", "channels", v.channels);
  get_to(j, "model.vision", "patch_size", v.patch_size);
  get_to(j, "model.vision", "layers", v.layers);
  get_to(j, "model.vision", "heads", v.heads);
  get_to(j, "model.vision", "mlp_ratio", v.mlp_ratio);
}

void parse_text(const json& j, TextConfig& t) {
  check_keys(j, "model.text",
             {"vocab_size", "max_tokens", "layers", "heads", "mlp_ratio"});
  get_to(j, "model.text", "vocab_size", t.vocab_size);
  get_to(j, "model.text", "max_tokens", t.max_tokens);
  get_to(j, "model.text", "layers", t.layers);
  get_to(j, "model.text", "heads", t.heads);
  get_to(j, "model.text", "mlp_ratio", t.mlp_ratio);
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, "model", {"embed_dim", "vision", "text", "seed"});
  get_to(j, "model", "embed_dim", m.embed_dim);
  if (j.contains("vision")) parse_vision(j.at("vision"), m.vision);
  if (j.contains("text")) parse_text(j.at("text"), m.text);
  get_to(j, "model", "seed", m.seed);
}

void parse_data(const json& j, DataConfig& d) {
  check_keys(j, "data",
             {"seed", "t_raw", "h_raw", "w_raw", "channels", "noise",
              "train_per_class", "val_per_class", "families"});
  get_to(j, "data", "seed", d.seed);
  get_to(j, "data", "t_raw", d.t_raw);
  get_to(j, "data", "h_raw", d.h_raw);
  get_to(j, "data", "w_raw", d.w_raw);
  get_to(j, "data", "channels", d.channels);
  get_to(j, "data", "noise", d.noise);
  get_to(j, "data", "train_per_class", d.train_per_class);
  get_to(j, "data", "val_per_class", d.val_per_class);
  get_to(j, "data", "families", d.families);
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"regime", "epochs", "batch_size", "learning_rate", "weight_decay",
              "fusion", "frames", "seed", "source_manifest", "stage1_checkpoint"});
  get_to(j, "train", "regime", t.regime);
  get_to(j, "train", "epochs", t.epochs);
  get_to(j, "train", "batch_size", t.batch_size);
  get_to(j, "train", "learning_rate", t.learning_rate);
  get_to(j, "train", "weight_decay", t.weight_decay);
  get_to(j, "train", "fusion", t.fusion);
  get_to(j, "train", "frames", t.frames);
  get_to(j, "train", "seed", t.seed);
  get_to(j, "train", "source_manifest", t.source_manifest);
  get_to(j, "train", "stage1_checkpoint", t.stage1_checkpoint);
}

void parse_protocol(const json& j, ProtocolConfig& p) {
  check_keys(j, "protocol",
             {"setting", "k", "frames", "spatial_crops", "temporal_clips",
              "crop_size", "seed", "target_classes"});
  get_to(j, "protocol", "setting", p.setting);
  get_to(j, "protocol", "k", p.k);
  get_to(j, "protocol", "frames", p.frames);
  get_to(j, "protocol", "spatial_crops", p.spatial_crops);
  get_to(j, "protocol", "temporal_clips", p.temporal_clips);
  get_to(j, "protocol", "crop_size", p.crop_size);
  get_to(j, "protocol", "seed", p.seed);
  get_to(j, "protocol", "target_classes", p.target_classes);
}

void parse_prompts(const json& j, PromptConfig& p) {
  check_keys(j, "prompts", {"n_vision_tokens", "n_text_tokens", "depth", "init_std"});
  get_to(j, "prompts", "n_vision_tokens", p.n_vision_tokens);
  get_to(j, "prompts", "n_text_tokens", p.n_text_tokens);
  get_to(j, "prompts", "depth", p.depth);
  get_to(j, "prompts", "init_std", p.init_std);
}

}  // namespace

void ModelConfig::validate() const {
  if (embed_dim <= 0) throw ConfigError("model.embed_dim: must be positive");
  if (vision.image_size <= 0 || vision.patch_size <= 0)
    throw ConfigError("model.vision: sizes must be positive");
  if (vision.image_size % vision.patch_size != 0)
    throw ConfigError("model.vision.patch_size: must divide image_size");
  if (vision.heads <= 0 || embed_dim % vision.heads != 0)
    throw ConfigError("model.vision.heads: must divide embed_dim");
  if (text.heads <= 0 || embed_dim % text.heads != 0)
    throw ConfigError("model.text.heads: must divide embed_dim");
  if (vision.layers <= 0 || text.layers <= 0)
    throw ConfigError("model: layer counts must be positive");
  if (text.max_tokens <= 2 || text.max_tokens > 77)
    throw ConfigError("model.text.max_tokens: must be in (2, 77]");
  if (vision.channels <= 0) throw ConfigError("model.vision.channels: must be positive");
  if (vision.mlp_ratio <= 0 || text.mlp_ratio <= 0)
    throw ConfigError("model: mlp_ratio must be positive");
}

void PromptConfig::validate(const ModelConfig& model) const {
  if (n_vision_tokens < 0 || n_text_tokens < 0)
    throw ConfigError("prompts: token counts must be >= 0");
  if (depth < 1) throw ConfigError("prompts.depth: must be >= 1");
  if (depth > std::min(model.vision.layers, model.text.layers))
    throw ConfigError("prompts.depth: exceeds tower layer count");
  if (init_std < 0) throw ConfigError("prompts.init_std: must be >= 0");
}

void DataConfig::validate() const {
  if (t_raw <= 0 || h_raw <= 0 || w_raw <= 0 || channels <= 0)
    throw ConfigError("data: dimensions must be positive");
  if (noise < 0 || noise > 0.5) throw ConfigError("data.noise: must be in [0, 0.5]");
  if (train_per_class < 1 || val_per_class < 1)
    throw ConfigError("data: per-class counts must be >= 1");
  if (families.empty()) throw ConfigError("data.families: must be non-empty");
  for (size_t i = 0; i < families.size(); ++i) {
    const std::string& f = families[i];
    if (f != "appearance" && f != "compositional" && f != "trajectory")
      throw ConfigError("data.families: unknown family '" + f + "'");
    for (size_t j = 0; j < i; ++j)
      if (families[j] == f)
        throw ConfigError("data.families: duplicate family '" + f + "'");
  }
}

void TrainConfig::validate() const {
  if (regime != "full_ft" && regime != "image_ft" && regime != "text_ft" &&
      regime != "prompt_only" && regime != "frozen")
    throw ConfigError("train.regime: unknown regime '" + regime + "'");
  if (epochs < 0) throw ConfigError("train.epochs: must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (learning_rate < 0) throw ConfigError("train.learning_rate: must be >= 0");
  if (resolved_lr() <= 0) throw ConfigError("train.learning_rate: must be > 0");
  if (weight_decay < 0) throw ConfigError("train.weight_decay: must be >= 0");
  if (fusion != "embedding" && fusion != "decision" && fusion != "image")
    throw ConfigError("train.fusion: unknown mode '" + fusion + "'");
  if (frames < 1) throw ConfigError("train.frames: must be >= 1");
  if (regime == "prompt_only" && stage1_checkpoint.empty())
    throw ConfigError("train.stage1_checkpoint: required for regime prompt_only");
}

void ProtocolConfig::validate() const {
  if (setting != "zero_shot" && setting != "base_to_novel" && setting != "few_shot" &&
      setting != "fully_supervised")
    throw ConfigError("protocol.setting: unknown setting '" + setting + "'");
  if (k != 2 && k != 4 && k != 8 && k != 16)
    throw ConfigError("protocol.k: shots must be one of {2,4,8,16}");
  if (frames < 1) throw ConfigError("protocol.frames: must be >= 1");
  if (spatial_crops < 1 || temporal_clips < 1)
    throw ConfigError("protocol: view counts must be >= 1");
  if (crop_size < 1) throw ConfigError("protocol.crop_size: must be >= 1");
}

void RunConfig::validate() const {
  model.validate();
  data.validate();
  train.validate();
  protocol.validate();
  prompts.validate(model);
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "config", {"model", "data", "train", "protocol", "prompts"});
  RunConfig c;
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  if (j.contains("data")) parse_data(j.at("data"), c.data);
  if (j.contains("train")) parse_train(j.at("train"), c.train);
  if (j.contains("protocol")) parse_protocol(j.at("protocol"), c.protocol);
  if (j.contains("prompts")) parse_prompts(j.at("prompts"), c.prompts);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

namespace {
json model_json(const ModelConfig& m) {
  return {{"embed_dim", m.embed_dim},
          {"vision",
           {{"image_size", m.vision.image_size},
            {"channels", m.vision.channels},
            {"patch_size", m.vision.patch_size},
            {"layers", m.vision.layers},
            {"heads", m.vision.heads},
            {"mlp_ratio", m.vision.mlp_ratio}}},
          {"text",
           {{"vocab_size", m.text.vocab_size},
            {"max_tokens", m.text.max_tokens},
            {"layers", m.text.layers},
            {"heads", m.text.heads},
            {"mlp_ratio", m.text.mlp_ratio}}},
          {"seed", m.seed}};
}

json prompt_json(const PromptConfig& p) {
  return {{"n_vision_tokens", p.n_vision_tokens},
          {"n_text_tokens", p.n_text_tokens},
          {"depth", p.depth},
          {"init_std", p.init_std}};
}
}  // namespace

std::string model_config_to_json(const ModelConfig& m) {
  return model_json(m).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: invalid JSON: ") + e.what());
  }
  ModelConfig m;
  parse_model(j, m);
  m.validate();
  return m;
}

std::string prompt_config_to_json(const PromptConfig& p) {
  return prompt_json(p).dump();
}

PromptConfig prompt_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("prompt config: invalid JSON: ") + e.what());
  }
  PromptConfig p;
  parse_prompts(j, p);
  return p;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["model"] = model_json(c.model);
  j["data"] = {{"seed", c.data.seed},
               {"t_raw", c.data.t_raw},
               {"h_raw", c.data.h_raw},
               {"w_raw", c.data.w_raw},
               {"channels", c.data.channels},
               {"noise", c.data.noise},
               {"train_per_class", c.data.train_per_class},
               {"val_per_class", c.data.val_per_class},
               {"families", c.data.families}};
  j["train"] = {{"regime", c.train.regime},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"weight_decay", c.train.weight_decay},
                {"fusion", c.train.fusion},
                {"frames", c.train.frames},
                {"seed", c.train.seed},
                {"source_manifest", c.train.source_manifest},
                {"stage1_checkpoint", c.train.stage1_checkpoint}};
  j["protocol"] = {{"setting", c.protocol.setting},
                   {"k", c.protocol.k},
                   {"frames", c.protocol.frames},
                   {"spatial_crops", c.protocol.spatial_crops},
                   {"temporal_clips", c.protocol.temporal_clips},
                   {"crop_size", c.protocol.crop_size},
                   {"seed", c.protocol.seed},
                   {"target_classes", c.protocol.target_classes}};
  j["prompts"] = prompt_json(c.prompts);
  return j.dump(2);
}

std::string config_hash(const RunConfig& c) {
  return digest_hex(run_config_to_json(c));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace vtc
