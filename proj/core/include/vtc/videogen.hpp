#pragma once

#include <array>
#include <string>
#include <vector>

#include "vtc/config.hpp"
#include "vtc/tensor.hpp"

namespace vtc {

struct ClassSpec {
  int class_id = -1;
  std::string name;
  std::string family;  // appearance | compositional | trajectory
  std::vector<std::string> shapes;
  std::array<double, 3> color{0, 0, 0};  // appearance base color
  std::string axis;                      // trajectory: horizontal | vertical
};

struct VideoSample {
  int t_raw = 0, h = 0, w = 0, c = 0;
  std::vector<float> frames;  // [T_raw, H, W, C] row-major, values in [0,1]
  int class_id = -1;
  uint64_t sample_seed = 0;
  std::string video_id;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string generator_version = "1";
  DataConfig gen;
  std::vector<ClassSpec> classes;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<VideoSample> train;  // class-major: [class_slot * per_class + idx]
  std::vector<VideoSample> val;

  int class_slot(int class_id) const;  // position of class_id in manifest.classes
  const VideoSample& train_sample(int class_id, int idx) const;
  const VideoSample& val_sample(int class_id, int idx) const;
};

struct ViewSet {
  int spatial_crops = 1;
  int temporal_clips = 1;
  int crop_size = 32;
  int frames_per_clip = 8;
};

// The 19-class roster (9 appearance + 6 compositional + 4 trajectory),
// filtered to the requested families; class ids are stable roster positions.
std::vector<ClassSpec> make_class_roster(const std::vector<std::string>& families);

VideoSample generate(const ClassSpec& spec, uint64_t sample_seed, const DataConfig& dims);

uint64_t sample_seed_for(uint64_t dataset_seed, int class_id, bool train, int index);

Dataset generate_dataset(const DataConfig& cfg);

// TSN sparse sampling: T equal segments; train picks uniformly inside each
// segment, eval picks each segment's center floor((2j+1)*t_raw/(2T)).
std::vector<int> sparse_frame_indices(int t_raw, int t, bool train_mode, uint64_t seed);

// Frames at the sparse indices, as double rows [T, H*W*C] (full raw frames).
Tensor sample_frames(const VideoSample& video, int t, bool train_mode, uint64_t seed);

// Deterministic crop grid in declared order: center, then corners TL,TR,BL,BR.
std::vector<std::pair<int, int>> spatial_offsets(int h, int w, int crop, int count);

// Evenly offset sparse sampling for temporal clip `clip` of `clip_count`.
std::vector<int> clip_frame_indices(int t_raw, int t, int clip, int clip_count);

// spatial_crops x temporal_clips cropped eval clips, each [T, crop*crop*C],
// ordered spatial-major.  Deterministic; seed reserved for future train-time
// view jitter.
std::vector<Tensor> make_views(const VideoSample& video, const ViewSet& vs,
                               uint64_t seed);

// one cropped clip given explicit frame indices and crop origin
Tensor crop_clip(const VideoSample& video, const std::vector<int>& frame_idx, int oy,
                 int ox, int crop);

// Disk format: <dir>/manifest.json plus train/ and val/ sample files, each a
// JSON header line followed by the little-endian float32 pixel payload.
void write_dataset(const std::string& dir, const Dataset& ds, bool force = false);
Dataset load_dataset(const std::string& dir);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

void write_sample_file(const std::string& path, const VideoSample& s);
VideoSample read_sample_file(const std::string& path);

std::vector<std::string> class_names(const std::vector<ClassSpec>& classes);

}  // namespace vtc
