#pragma once

#include <map>
#include <string>
#include <vector>

#include "vtc/encoders.hpp"
#include "vtc/fusion.hpp"
#include "vtc/videogen.hpp"

namespace vtc {

// A trained (or freshly initialized) model bundle: everything needed to
// evaluate or continue training.
struct Model {
  ModelConfig config;
  PromptConfig prompts;  // prompts.empty() means no prompt banks attached
  bool prompted = false;
  ParameterStore params;
  Vocabulary vocab;

  const PromptConfig* prompt_ptr() const { return prompted ? &prompts : nullptr; }
  double temperature() const;  // tau = exp(-logit_scale), clamped >= 0.01
};

struct SplitSpec {
  std::string setting;
  std::vector<int> source_classes;            // Y_S
  std::vector<int> target_classes;            // Y_T (zero_shot)
  std::vector<int> base_classes;              // Y_B
  std::vector<int> novel_classes;             // Y_N
  int k = 0;                                  // shots
  uint64_t seed = 0;
  int split_index = 1;
  std::map<int, std::vector<int>> train_samples;  // class_id -> train indices

  void validate() const;
};

struct SplitMetrics {
  double top1 = 0, top5 = 0;
  double base_acc = 0, novel_acc = 0, hm = 0;
  double homogeneity = 0, completeness = 0, v_measure = 0;
  int sample_count = 0;
};

struct EvalReport {
  std::string setting;
  std::vector<SplitMetrics> splits;
  SplitMetrics mean, stddev;
  std::string config_digest;
  uint64_t seed = 0;
};

// Frequency split: sort by descending count (ties by ascending class id),
// top ceil(n/2) classes become base.
std::pair<std::vector<int>, std::vector<int>> make_base_novel_split(
    const std::map<int, int>& class_frequencies);

// Exactly K deterministic train-sample indices per class; the three
// split_index values give pairwise different subsets whenever enough
// distinct subsets exist.
std::map<int, std::vector<int>> sample_k_shot(const DatasetManifest& manifest, int k,
                                              uint64_t seed, int split_index);

// Percent of rows whose true label ranks in the top k (ties resolved toward
// lower class indices).
double top_k_accuracy(const Tensor& logits, const std::vector<int>& labels, int k);

double harmonic_mean(double base_acc, double novel_acc);

struct ClusterQuality {
  double homogeneity = 0, completeness = 0, v_measure = 0;
};

ClusterQuality cluster_quality(const std::vector<int>& pred_labels,
                               const std::vector<int>& true_labels);

// Split constructors for the four settings over one generated dataset.
SplitSpec make_zero_shot_split(const DatasetManifest& manifest,
                               const std::vector<std::string>& target_names);
SplitSpec make_base_to_novel_spec(const DatasetManifest& manifest, int k, uint64_t seed,
                                  int split_index);
SplitSpec make_few_shot_spec(const DatasetManifest& manifest, int k, uint64_t seed,
                             int split_index);
SplitSpec make_supervised_spec(const DatasetManifest& manifest);

struct EvalOptions {
  int frames = 8;
  int spatial_crops = 1;
  int temporal_clips = 1;
  int crop_size = 32;
  FusionMode fusion = FusionMode::embedding;
};

struct EvalOutcome {
  SplitMetrics metrics;
  Tensor embeddings;              // [N, D] per-video view-mean pooled, f32-rounded
  std::vector<int> true_labels;   // positions in the eval class list
  std::vector<int> pred_labels;   // nearest-text assignment, same index space
  std::vector<int> class_ids;     // eval class list (column order)
  std::vector<std::string> video_ids;
};

// Encode + fuse + score the given videos against the given classes.
EvalOutcome evaluate_videos(const Model& model,
                            const std::vector<const VideoSample*>& videos,
                            const std::vector<int>& labels,
                            const std::vector<ClassSpec>& classes,
                            const EvalOptions& opt);

// One split of the full protocol (all val samples of the relevant classes).
SplitMetrics run_protocol_split(const SplitSpec& spec, const Model& model,
                                const Dataset& ds, const EvalOptions& opt,
                                EvalOutcome* outcome = nullptr);

EvalReport aggregate_splits(const std::string& setting,
                            const std::vector<SplitMetrics>& splits);

std::string eval_report_to_json(const EvalReport& r);
EvalReport eval_report_from_json(const std::string& text);

std::string split_spec_to_json(const SplitSpec& spec);
SplitSpec split_spec_from_json(const std::string& text);

// Text embeddings for a class list (template-rendered prompts), as [K, D].
Tensor class_text_embeddings(const Model& model, const std::vector<ClassSpec>& classes);

// Throws VocabError if any class name needs a word the vocabulary lacks.
void require_vocab_coverage(const Vocabulary& vocab,
                            const std::vector<ClassSpec>& classes);

}  // namespace vtc
