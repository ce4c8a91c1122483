#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtc/config.hpp"
#include "vtc/graph.hpp"
#include "vtc/params.hpp"
#include "vtc/tokenizer.hpp"

namespace vtc {

struct FrameEmbeddings {
  Tensor values;  // [T, D], unnormalized
  std::string source_video_id;
};

struct TextEmbedding {
  std::vector<double> value;  // [D]
  int class_id = -1;
};

// Split one frame (row-major H*W*C pixels) into non-overlapping P x P patches,
// flattened row-major, patches in row-major grid order: [N, P*P*C].
Tensor patchify(const double* frame, int h, int w, int c, int p);

// Batch version over R frames stored as rows: [R, H*W*C] -> [R, N, P*P*C].
Tensor patchify_rows(const Tensor& frames, int h, int w, int c, int p);

// Fresh parameter set for both towers plus logit_scale, deterministically
// initialized from cfg.seed with one RNG stream per tensor.
ParameterStore init_dual_encoder(const ModelConfig& cfg);

// Builds forward-pass subgraphs over a shared parameter store.  One instance
// per Graph; parameter leaves are created lazily and reused within the graph.
class ModelForward {
 public:
  ModelForward(Graph& g, const ParameterStore& params, const ModelConfig& cfg,
               const PromptConfig* prompts = nullptr);

  // Node id of the parameter leaf (created on first use).
  int param(const std::string& name);

  // frames: [R, H*W*C] pixel rows -> [R, D] embedding node, unnormalized.
  int encode_frames(const Tensor& frames);

  // -> [B, D] embedding node read at each sequence's EOS position.
  int encode_text(const std::vector<TokenSequence>& seqs);

  int logit_scale() { return param("logit_scale"); }

  Graph& graph() { return *g_; }
  const std::map<std::string, int>& leaves() const { return leaves_; }
  const ModelConfig& config() const { return cfg_; }
  bool prompted() const { return prompts_ != nullptr && !prompts_->empty(); }
  const PromptConfig* prompt_config() const { return prompts_; }

 private:
  int transformer_blocks(int x, const std::string& tower, int layers, int heads,
                         int n_prompt, bool causal);

  Graph* g_;
  const ParameterStore* params_;
  ModelConfig cfg_;
  const PromptConfig* prompts_;
  std::map<std::string, int> leaves_;
};

// Value-level convenience wrappers (build a private graph, forward only).
Tensor encode_frames_values(const ParameterStore& params, const ModelConfig& cfg,
                            const Tensor& frames,
                            const PromptConfig* prompts = nullptr);
Tensor encode_text_values(const ParameterStore& params, const ModelConfig& cfg,
                          const std::vector<TokenSequence>& seqs,
                          const PromptConfig* prompts = nullptr);

}  // namespace vtc
