#pragma once

#include <string>
#include <vector>

#include "vtc/encoders.hpp"
#include "vtc/graph.hpp"

namespace vtc {

struct VideoEmbedding {
  std::vector<double> value;  // [D]
  std::string video_id;
};

struct LogitMatrix {
  Tensor values;  // [B, K]
  bool temperature_applied = false;
};

enum class FusionMode { embedding, decision, image };

FusionMode parse_fusion_mode(const std::string& name);
std::string fusion_mode_name(FusionMode mode);

// Arithmetic mean over frame rows.
VideoEmbedding temporal_pool(const FrameEmbeddings& x);

double cosine_sim(const std::vector<double>& u, const std::vector<double>& v);

// (i, j) = cos(v_i, t_j) / tau.
LogitMatrix logits(const std::vector<VideoEmbedding>& videos,
                   const std::vector<TextEmbedding>& texts, double tau);

// Mean over rows of -log softmax at the diagonal (square matrix, row i's
// positive is column i), computed with max subtraction.
double contrastive_loss(const LogitMatrix& m);
// The unreduced row sum (= mean * B), kept for logging.
double contrastive_loss_sum(const LogitMatrix& m);

struct FusionResult {
  LogitMatrix logits;               // video rows, or frame rows in image mode
  std::vector<int> frame_to_video;  // image mode only: logits row -> video index
};

// Frame embeddings -> class logits under one of the three fusion modes.
// image mode returns per-frame rows unfused (training applies the loss per
// frame); averaging them per video afterwards reproduces decision mode.
FusionResult fuse_and_score(const std::vector<FrameEmbeddings>& videos,
                            const std::vector<TextEmbedding>& texts, double tau,
                            FusionMode mode);

// Collapse image-mode frame rows to per-video rows by averaging; identity
// for the other modes.
LogitMatrix inference_logits(const FusionResult& fused, int video_count);

// Arithmetic mean over per-view logit matrices.
Tensor multi_view_logits(const std::vector<Tensor>& views);

// Graph-side fused logits for training.  frame_emb: [B*T, D] node; text_emb:
// [K, D] node; returns [B,K] logits ([B*T,K] for image mode, caller repeats
// targets per frame).  Temperature comes from exp(logit_scale).
int build_fused_logits(Graph& g, int frame_emb, int text_emb, int logit_scale,
                       int frames_per_video, FusionMode mode);

}  // namespace vtc
