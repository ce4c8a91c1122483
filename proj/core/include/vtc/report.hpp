#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtc/trainer.hpp"

namespace vtc {

// ---- embedding dump ----

// Header line: count, dim, class names, source checkpoint digest.  Rows:
// length-prefixed video id, int32 class id, dim little-endian float32 values.
struct EmbeddingDump {
  int dim = 0;
  std::vector<std::string> class_names;
  std::string checkpoint_digest;
  std::vector<std::string> video_ids;
  std::vector<int> class_ids;  // one per row
  Tensor embeddings;           // [N, dim], float32-valued
};

void save_embedding_dump(const std::string& path, const EmbeddingDump& dump);
EmbeddingDump load_embedding_dump(const std::string& path);

// ---- loss curve file ----

void save_loss_curve(const std::string& path, const TrainResult& result,
                     const std::string& config_digest, uint64_t seed);
TrainResult load_loss_curve(const std::string& path,
                            std::string* config_digest = nullptr,
                            uint64_t* seed = nullptr);

// ---- text tables ----

struct ReportRow {
  std::string label;
  SplitMetrics mean, stddev;
  int split_count = 1;
};

// Fixed-width method x metric table, rows sorted by harmonic mean then top-1
// (descending).  "+/-" stddev columns appear when any row aggregates splits.
std::string render_metric_table(std::vector<ReportRow> rows);

// ---- plots ----

struct Image {
  int w = 0, h = 0;
  std::vector<uint8_t> rgb;  // top-down rows, 3 bytes per pixel

  void fill(uint8_t r, uint8_t g, uint8_t b);
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Polyline chart with an axes box; series colors cycle a fixed palette.
Image render_line_plot(const std::vector<Series>& series, int w, int h);

// Uncompressed 24-bit BMP.
void write_bmp(const std::string& path, const Image& img);

}  // namespace vtc
