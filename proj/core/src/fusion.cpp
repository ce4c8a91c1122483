#include "vtc/fusion.hpp"

#include <cmath>

namespace vtc {

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "embedding") return FusionMode::embedding;
  if (name == "decision") return FusionMode::decision;
  if (name == "image") return FusionMode::image;
  throw InvalidMode("unknown fusion mode '" + name + "'");
}

std::string fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::embedding: return "embedding";
    case FusionMode::decision: return "decision";
    case FusionMode::image: return "image";
  }
  throw InvalidMode("bad fusion mode value");
}

VideoEmbedding temporal_pool(const FrameEmbeddings& x) {
  if (x.values.ndim() != 2 || x.values.dim(0) < 1)
    throw EmptyVideo("temporal_pool: no frames for video '" + x.source_video_id + "'");
  int t = x.values.dim(0), d = x.values.dim(1);
  VideoEmbedding out;
  out.video_id = x.source_video_id;
  out.value.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < t; ++i) {
    const double* row = x.values.row_ptr(i);
    for (int j = 0; j < d; ++j) out.value[static_cast<size_t>(j)] += row[j];
  }
  for (double& v : out.value) v /= t;
  return out;
}

double cosine_sim(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw ShapeError("cosine_sim: dimension mismatch " + std::to_string(u.size()) +
                     " vs " + std::to_string(v.size()));
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroNorm("cosine_sim: zero-norm vector");
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

LogitMatrix logits(const std::vector<VideoEmbedding>& videos,
                   const std::vector<TextEmbedding>& texts, double tau) {
  if (tau <= 0.0)
    throw InvalidTemperature("temperature must be positive, got " + std::to_string(tau));
  if (videos.empty() || texts.empty())
    throw ShapeError("logits: empty video or text set");
  LogitMatrix out;
  out.values = Tensor({static_cast<int>(videos.size()), static_cast<int>(texts.size())});
  out.temperature_applied = true;
  for (size_t i = 0; i < videos.size(); ++i) {
    double* row = out.values.row_ptr(static_cast<int>(i));
    for (size_t j = 0; j < texts.size(); ++j)
      row[j] = cosine_sim(videos[i].value, texts[j].value) / tau;
  }
  return out;
}

double contrastive_loss(const LogitMatrix& m) {
  const Tensor& v = m.values;
  if (v.ndim() != 2 || v.dim(0) != v.dim(1))
    throw ShapeError("contrastive_loss: logits must be square, got " +
                     shape_str(v.shape));
  int b = v.dim(0);
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const double* row = v.row_ptr(i);
    double mx = row[0];
    for (int j = 1; j < b; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < b; ++j) z += std::exp(row[j] - mx);
    total -= row[i] - mx - std::log(z);
  }
  return total / b;
}

double contrastive_loss_sum(const LogitMatrix& m) {
  return contrastive_loss(m) * m.values.dim(0);
}

namespace {
FrameEmbeddings single_frame(const FrameEmbeddings& video, int t) {
  FrameEmbeddings f;
  f.source_video_id = video.source_video_id;
  int d = video.values.dim(1);
  f.values = Tensor({1, d});
  std::copy(video.values.row_ptr(t), video.values.row_ptr(t) + d, f.values.row_ptr(0));
  return f;
}
}  // namespace

FusionResult fuse_and_score(const std::vector<FrameEmbeddings>& videos,
                            const std::vector<TextEmbedding>& texts, double tau,
                            FusionMode mode) {
  if (videos.empty()) throw EmptyVideo("fuse_and_score: no videos");
  FusionResult out;
  switch (mode) {
    case FusionMode::embedding: {
      std::vector<VideoEmbedding> pooled;
      pooled.reserve(videos.size());
      for (const FrameEmbeddings& v : videos) pooled.push_back(temporal_pool(v));
      out.logits = logits(pooled, texts, tau);
      return out;
    }
    case FusionMode::decision: {
      // mean over per-frame logit rows
      out.logits.values =
          Tensor({static_cast<int>(videos.size()), static_cast<int>(texts.size())});
      out.logits.temperature_applied = true;
      for (size_t i = 0; i < videos.size(); ++i) {
        int t_count = videos[i].values.dim(0);
        if (t_count < 1) throw EmptyVideo("fuse_and_score: empty video");
        double* row = out.logits.values.row_ptr(static_cast<int>(i));
        for (int t = 0; t < t_count; ++t) {
          std::vector<VideoEmbedding> one = {temporal_pool(single_frame(videos[i], t))};
          LogitMatrix lm = logits(one, texts, tau);
          const double* r = lm.values.row_ptr(0);
          for (size_t j = 0; j < texts.size(); ++j) row[j] += r[j];
        }
        for (size_t j = 0; j < texts.size(); ++j) row[j] /= t_count;
      }
      return out;
    }
    case FusionMode::image: {
      int total_frames = 0;
      for (const FrameEmbeddings& v : videos) {
        if (v.values.dim(0) < 1) throw EmptyVideo("fuse_and_score: empty video");
        total_frames += v.values.dim(0);
      }
      out.logits.values = Tensor({total_frames, static_cast<int>(texts.size())});
      out.logits.temperature_applied = true;
      out.frame_to_video.reserve(static_cast<size_t>(total_frames));
      int r = 0;
      for (size_t i = 0; i < videos.size(); ++i) {
        for (int t = 0; t < videos[i].values.dim(0); ++t, ++r) {
          std::vector<VideoEmbedding> one = {temporal_pool(single_frame(videos[i], t))};
          LogitMatrix lm = logits(one, texts, tau);
          std::copy(lm.values.row_ptr(0), lm.values.row_ptr(0) + texts.size(),
                    out.logits.values.row_ptr(r));
          out.frame_to_video.push_back(static_cast<int>(i));
        }
      }
      return out;
    }
  }
  throw InvalidMode("bad fusion mode value");
}

LogitMatrix inference_logits(const FusionResult& fused, int video_count) {
  if (fused.frame_to_video.empty()) return fused.logits;
  const Tensor& v = fused.logits.values;
  int k = v.dim(1);
  LogitMatrix out;
  out.values = Tensor({video_count, k});
  out.temperature_applied = fused.logits.temperature_applied;
  std::vector<int> counts(static_cast<size_t>(video_count), 0);
  for (int r = 0; r < v.dim(0); ++r) {
    int vid = fused.frame_to_video[static_cast<size_t>(r)];
    double* dst = out.values.row_ptr(vid);
    const double* src = v.row_ptr(r);
    for (int j = 0; j < k; ++j) dst[j] += src[j];
    counts[static_cast<size_t>(vid)]++;
  }
  for (int i = 0; i < video_count; ++i) {
    if (counts[static_cast<size_t>(i)] == 0)
      throw EmptyVideo("inference_logits: video with no frame rows");
    double* dst = out.values.row_ptr(i);
    for (int j = 0; j < k; ++j) dst[j] /= counts[static_cast<size_t>(i)];
  }
  return out;
}

Tensor multi_view_logits(const std::vector<Tensor>& views) {
  if (views.empty()) throw EmptyViews("multi_view_logits: no views");
  Tensor out = views[0];
  for (size_t v = 1; v < views.size(); ++v) {
    if (!same_shape(views[v], out))
      throw ShapeError("multi_view_logits: view shape mismatch");
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += views[v].data[i];
  }
  for (double& x : out.data) x /= static_cast<double>(views.size());
  return out;
}

int build_fused_logits(Graph& g, int frame_emb, int text_emb, int logit_scale,
                       int frames_per_video, FusionMode mode) {
  int tn = g.l2norm_rows(text_emb);
  switch (mode) {
    case FusionMode::embedding: {
      int video = g.mean_group_rows(frame_emb, frames_per_video);
      int vn = g.l2norm_rows(video);
      return g.scale_by_exp(g.matmul_nt(vn, tn), logit_scale);
    }
    case FusionMode::decision: {
      int fn = g.l2norm_rows(frame_emb);
      int per_frame = g.scale_by_exp(g.matmul_nt(fn, tn), logit_scale);
      return g.mean_group_rows(per_frame, frames_per_video);
    }
    case FusionMode::image: {
      int fn = g.l2norm_rows(frame_emb);
      return g.scale_by_exp(g.matmul_nt(fn, tn), logit_scale);
    }
  }
  throw InvalidMode("bad fusion mode value");
}

}  // namespace vtc
