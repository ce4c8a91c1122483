#include "vtc/videogen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "vtc/digest.hpp"
#include "vtc/io.hpp"
#include "vtc/rng.hpp"
#include <json.hpp>

namespace vtc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kBackground = 0.1;
constexpr int kRadius = 6;
constexpr int kWalkStep = 2;
constexpr int kSweep = 12;

struct Color {
  double r, g, b;
};

bool inside_shape(const std::string& shape, int dx, int dy, int r) {
  if (shape == "circle") return dx * dx + dy * dy <= r * r;
  if (shape == "square") return std::abs(dx) <= r && std::abs(dy) <= r;
  if (shape == "triangle")
    return dy >= -r && dy <= r && std::abs(dx) * 2 <= dy + r;
  if (shape == "diamond") return std::abs(dx) + std::abs(dy) <= r;
  throw ConfigError("unknown shape '" + shape + "'");
}

void draw_shape(std::vector<double>& canvas, int h, int w, const std::string& shape,
                int cy, int cx, const Color& col) {
  for (int dy = -kRadius; dy <= kRadius; ++dy) {
    int y = cy + dy;
    if (y < 0 || y >= h) continue;
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      int x = cx + dx;
      if (x < 0 || x >= w) continue;
      if (!inside_shape(shape, dx, dy, kRadius)) continue;
      double* px = canvas.data() + (static_cast<size_t>(y) * w + x) * 3;
      px[0] = col.r;
      px[1] = col.g;
      px[2] = col.b;
    }
  }
}

Color bright_color(Rng& rng) {
  return {rng.uniform(0.45, 1.0), rng.uniform(0.45, 1.0), rng.uniform(0.45, 1.0)};
}

int clamp_pos(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

int sweep_pos(int center, int dir, int t, int t_raw) {
  double off = kSweep * (2.0 * t - (t_raw - 1)) / (t_raw - 1);
  return center + static_cast<int>(std::lround(dir * off));
}

struct FramePlan {
  std::string shape;
  int cy, cx;
  Color color;
};

std::vector<FramePlan> plan_frames(const ClassSpec& spec, uint64_t sample_seed,
                                   const DataConfig& dims) {
  Rng color_rng(sample_seed, "color");
  Rng motion_rng(sample_seed, "motion");
  int t_raw = dims.t_raw, h = dims.h_raw, w = dims.w_raw;
  int lo_y = kRadius, hi_y = h - 1 - kRadius;
  int lo_x = kRadius, hi_x = w - 1 - kRadius;
  std::vector<FramePlan> plans(static_cast<size_t>(t_raw));

  if (spec.family == "appearance") {
    Color col{spec.color[0] + color_rng.uniform(-0.1, 0.1),
              spec.color[1] + color_rng.uniform(-0.1, 0.1),
              spec.color[2] + color_rng.uniform(-0.1, 0.1)};
    int cy = lo_y + static_cast<int>(motion_rng.uniform_int(
                        static_cast<uint64_t>(hi_y - lo_y + 1)));
    int cx = lo_x + static_cast<int>(motion_rng.uniform_int(
                        static_cast<uint64_t>(hi_x - lo_x + 1)));
    for (int t = 0; t < t_raw; ++t) {
      plans[static_cast<size_t>(t)] = {spec.shapes[0], cy, cx, col};
      cy = clamp_pos(cy + static_cast<int>(motion_rng.uniform_int(2 * kWalkStep + 1)) -
                         kWalkStep,
                     lo_y, hi_y);
      cx = clamp_pos(cx + static_cast<int>(motion_rng.uniform_int(2 * kWalkStep + 1)) -
                         kWalkStep,
                     lo_x, hi_x);
    }
    return plans;
  }

  if (spec.family == "compositional") {
    Color col_a = bright_color(color_rng);
    Color col_b = bright_color(color_rng);
    // exactly half the frames show each shape, in shuffled order
    std::vector<int> which(static_cast<size_t>(t_raw));
    for (int t = 0; t < t_raw; ++t) which[static_cast<size_t>(t)] = t < t_raw / 2 ? 0 : 1;
    for (int i = t_raw - 1; i > 0; --i) {
      int j = static_cast<int>(motion_rng.uniform_int(static_cast<uint64_t>(i + 1)));
      std::swap(which[static_cast<size_t>(i)], which[static_cast<size_t>(j)]);
    }
    for (int t = 0; t < t_raw; ++t) {
      int s = which[static_cast<size_t>(t)];
      int cy = lo_y + static_cast<int>(motion_rng.uniform_int(
                          static_cast<uint64_t>(hi_y - lo_y + 1)));
      int cx = lo_x + static_cast<int>(motion_rng.uniform_int(
                          static_cast<uint64_t>(hi_x - lo_x + 1)));
      plans[static_cast<size_t>(t)] = {spec.shapes[static_cast<size_t>(s)], cy, cx,
                                       s == 0 ? col_a : col_b};
    }
    return plans;
  }

  if (spec.family == "trajectory") {
    Color col = bright_color(color_rng);
    int dir = motion_rng.uniform() < 0.5 ? 1 : -1;
    int cy0 = h / 2, cx0 = w / 2;
    for (int t = 0; t < t_raw; ++t) {
      int cy = cy0, cx = cx0;
      if (spec.axis == "horizontal")
        cx = sweep_pos(cx0, dir, t, t_raw);
      else if (spec.axis == "vertical")
        cy = sweep_pos(cy0, dir, t, t_raw);
      else
        throw ConfigError("trajectory class '" + spec.name + "': bad axis '" +
                          spec.axis + "'");
      plans[static_cast<size_t>(t)] = {spec.shapes[0], cy, cx, col};
    }
    return plans;
  }

  throw ConfigError("unknown class family '" + spec.family + "'");
}

const std::array<const char*, 3> kColorNames = {"red", "green", "blue"};
const std::array<Color, 3> kBaseColors = {Color{0.9, 0.15, 0.15},
                                          Color{0.15, 0.9, 0.15},
                                          Color{0.15, 0.15, 0.9}};
const std::array<const char*, 3> kAppearanceShapes = {"circle", "square", "triangle"};
const std::array<const char*, 4> kPairShapes = {"circle", "square", "triangle",
                                                "diamond"};
const std::array<const char*, 2> kSlideShapes = {"circle", "square"};
const std::array<const char*, 2> kAxes = {"horizontal", "vertical"};

}  // namespace

std::vector<ClassSpec> make_class_roster(const std::vector<std::string>& families) {
  std::set<std::string> want(families.begin(), families.end());
  for (const std::string& f : want)
    if (f != "appearance" && f != "compositional" && f != "trajectory")
      throw ConfigError("data.families: unknown family '" + f + "'");
  std::vector<ClassSpec> all;
  int id = 0;
  for (size_t c = 0; c < kColorNames.size(); ++c) {
    for (const char* s : kAppearanceShapes) {
      ClassSpec spec;
      spec.class_id = id++;
      spec.name = std::string(kColorNames[c]) + " " + s;
      spec.family = "appearance";
      spec.shapes = {s};
      spec.color = {kBaseColors[c].r, kBaseColors[c].g, kBaseColors[c].b};
      all.push_back(std::move(spec));
    }
  }
  for (size_t a = 0; a < kPairShapes.size(); ++a) {
    for (size_t b = a + 1; b < kPairShapes.size(); ++b) {
      ClassSpec spec;
      spec.class_id = id++;
      spec.name = std::string(kPairShapes[a]) + " with " + kPairShapes[b];
      spec.family = "compositional";
      spec.shapes = {kPairShapes[a], kPairShapes[b]};
      all.push_back(std::move(spec));
    }
  }
  for (const char* s : kSlideShapes) {
    for (const char* ax : kAxes) {
      ClassSpec spec;
      spec.class_id = id++;
      spec.name = std::string(s) + " sliding " + ax;
      spec.family = "trajectory";
      spec.shapes = {s};
      spec.axis = ax;
      all.push_back(std::move(spec));
    }
  }
  std::vector<ClassSpec> out;
  for (ClassSpec& spec : all)
    if (want.count(spec.family)) out.push_back(std::move(spec));
  if (out.empty()) throw ConfigError("data.families: no classes selected");
  return out;
}

VideoSample generate(const ClassSpec& spec, uint64_t sample_seed,
                     const DataConfig& dims) {
  if (dims.channels != 3)
    throw ConfigError("data.channels: generator renders RGB (3 channels)");
  if (dims.h_raw < 2 * kRadius + 2 || dims.w_raw < 2 * kRadius + 2)
    throw ConfigError("data: frame smaller than the object footprint");
  std::vector<FramePlan> plans = plan_frames(spec, sample_seed, dims);
  Rng noise_rng(sample_seed, "noise");

  VideoSample out;
  out.t_raw = dims.t_raw;
  out.h = dims.h_raw;
  out.w = dims.w_raw;
  out.c = dims.channels;
  out.class_id = spec.class_id;
  out.sample_seed = sample_seed;
  size_t frame_px = static_cast<size_t>(dims.h_raw) * dims.w_raw * 3;
  out.frames.resize(static_cast<size_t>(dims.t_raw) * frame_px);

  std::vector<double> canvas(frame_px);
  for (int t = 0; t < dims.t_raw; ++t) {
    std::fill(canvas.begin(), canvas.end(), kBackground);
    const FramePlan& p = plans[static_cast<size_t>(t)];
    draw_shape(canvas, dims.h_raw, dims.w_raw, p.shape, p.cy, p.cx, p.color);
    float* dst = out.frames.data() + static_cast<size_t>(t) * frame_px;
    for (size_t i = 0; i < frame_px; ++i) {
      double v = canvas[i] + noise_rng.uniform(-dims.noise, dims.noise);
      dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

uint64_t sample_seed_for(uint64_t dataset_seed, int class_id, bool train, int index) {
  return mix64(dataset_seed, static_cast<uint64_t>(class_id),
               (train ? 0ull : 1000000ull) + static_cast<uint64_t>(index));
}

int Dataset::class_slot(int class_id) const {
  for (size_t i = 0; i < manifest.classes.size(); ++i)
    if (manifest.classes[i].class_id == class_id) return static_cast<int>(i);
  throw DataError("class_id " + std::to_string(class_id) + " not in dataset");
}

const VideoSample& Dataset::train_sample(int class_id, int idx) const {
  return train[static_cast<size_t>(class_slot(class_id)) * manifest.gen.train_per_class +
               idx];
}

const VideoSample& Dataset::val_sample(int class_id, int idx) const {
  return val[static_cast<size_t>(class_slot(class_id)) * manifest.gen.val_per_class +
             idx];
}

Dataset generate_dataset(const DataConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.manifest.gen = cfg;
  ds.manifest.classes = make_class_roster(cfg.families);
  {
    json j = {{"seed", cfg.seed},
              {"t_raw", cfg.t_raw},
              {"h_raw", cfg.h_raw},
              {"w_raw", cfg.w_raw},
              {"channels", cfg.channels},
              {"noise", cfg.noise},
              {"train_per_class", cfg.train_per_class},
              {"val_per_class", cfg.val_per_class},
              {"families", cfg.families}};
    ds.manifest.dataset_id = digest_hex(j.dump());
  }
  for (const ClassSpec& spec : ds.manifest.classes) {
    for (int i = 0; i < cfg.train_per_class; ++i) {
      VideoSample s = generate(spec, sample_seed_for(cfg.seed, spec.class_id, true, i),
                               cfg);
      s.video_id = "c" + std::to_string(spec.class_id) + "_train_" + std::to_string(i);
      ds.train.push_back(std::move(s));
    }
  }
  for (const ClassSpec& spec : ds.manifest.classes) {
    for (int i = 0; i < cfg.val_per_class; ++i) {
      VideoSample s = generate(spec, sample_seed_for(cfg.seed, spec.class_id, false, i),
                               cfg);
      s.video_id = "c" + std::to_string(spec.class_id) + "_val_" + std::to_string(i);
      ds.val.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<int> sparse_frame_indices(int t_raw, int t, bool train_mode, uint64_t seed) {
  if (t > t_raw)
    throw ConfigError("sparse sampling: " + std::to_string(t) + " frames from " +
                      std::to_string(t_raw));
  std::vector<int> out(static_cast<size_t>(t));
  if (train_mode) {
    Rng rng(seed, "sparse");
    for (int j = 0; j < t; ++j) {
      int lo = static_cast<int>(static_cast<int64_t>(j) * t_raw / t);
      int hi = static_cast<int>(static_cast<int64_t>(j + 1) * t_raw / t) - 1;
      out[static_cast<size_t>(j)] =
          lo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(hi - lo + 1)));
    }
  } else {
    for (int j = 0; j < t; ++j)
      out[static_cast<size_t>(j)] =
          static_cast<int>(static_cast<int64_t>(2 * j + 1) * t_raw / (2 * t));
  }
  return out;
}

Tensor sample_frames(const VideoSample& video, int t, bool train_mode, uint64_t seed) {
  std::vector<int> idx = sparse_frame_indices(video.t_raw, t, train_mode, seed);
  int px = video.h * video.w * video.c;
  Tensor out({t, px});
  for (int j = 0; j < t; ++j) {
    const float* src =
        video.frames.data() + static_cast<size_t>(idx[static_cast<size_t>(j)]) * px;
    double* dst = out.row_ptr(j);
    for (int i = 0; i < px; ++i) dst[i] = static_cast<double>(src[i]);
  }
  return out;
}

std::vector<std::pair<int, int>> spatial_offsets(int h, int w, int crop, int count) {
  if (crop > h || crop > w)
    throw ConfigError("crop " + std::to_string(crop) + " larger than frame " +
                      std::to_string(h) + "x" + std::to_string(w));
  if (count < 1 || count > 5)
    throw ConfigError("spatial_crops: supported range is 1..5 (center + corners)");
  int my = h - crop, mx = w - crop;
  std::vector<std::pair<int, int>> grid = {
      {my / 2, mx / 2}, {0, 0}, {0, mx}, {my, 0}, {my, mx}};
  grid.resize(static_cast<size_t>(count));
  return grid;
}

std::vector<int> clip_frame_indices(int t_raw, int t, int clip, int clip_count) {
  if (t > t_raw) throw ConfigError("clip sampling: too many frames per clip");
  if (clip < 0 || clip >= clip_count) throw ConfigError("clip index out of range");
  std::vector<int> out(static_cast<size_t>(t));
  for (int j = 0; j < t; ++j) {
    double pos = (static_cast<double>(j) * clip_count + clip + 0.5) * t_raw /
                 (static_cast<double>(t) * clip_count);
    out[static_cast<size_t>(j)] = std::min(t_raw - 1, static_cast<int>(pos));
  }
  return out;
}

Tensor crop_clip(const VideoSample& video, const std::vector<int>& frame_idx, int oy,
                 int ox, int crop) {
  if (oy < 0 || ox < 0 || oy + crop > video.h || ox + crop > video.w)
    throw ConfigError("crop window out of bounds");
  int t = static_cast<int>(frame_idx.size());
  Tensor out({t, crop * crop * video.c});
  for (int j = 0; j < t; ++j) {
    const float* frame = video.frames.data() +
                         static_cast<size_t>(frame_idx[static_cast<size_t>(j)]) *
                             video.h * video.w * video.c;
    double* dst = out.row_ptr(j);
    for (int y = 0; y < crop; ++y) {
      const float* src =
          frame + (static_cast<size_t>(oy + y) * video.w + ox) * video.c;
      for (int i = 0; i < crop * video.c; ++i)
        dst[static_cast<size_t>(y) * crop * video.c + i] = static_cast<double>(src[i]);
    }
  }
  return out;
}

std::vector<Tensor> make_views(const VideoSample& video, const ViewSet& vs,
                               uint64_t seed) {
  (void)seed;
  if (vs.frames_per_clip > video.t_raw)
    throw ConfigError("frames_per_clip exceeds raw frame count");
  auto offsets = spatial_offsets(video.h, video.w, vs.crop_size, vs.spatial_crops);
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(vs.spatial_crops) * vs.temporal_clips);
  for (const auto& [oy, ox] : offsets) {
    for (int c = 0; c < vs.temporal_clips; ++c) {
      std::vector<int> idx =
          clip_frame_indices(video.t_raw, vs.frames_per_clip, c, vs.temporal_clips);
      out.push_back(crop_clip(video, idx, oy, ox, vs.crop_size));
    }
  }
  return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json classes = json::array();
  for (const ClassSpec& c : m.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"name", c.name},
                       {"family", c.family},
                       {"shapes", c.shapes},
                       {"color", c.color},
                       {"axis", c.axis}});
  }
  json j = {{"dataset_id", m.dataset_id},
            {"generator_version", m.generator_version},
            {"gen",
             {{"seed", m.gen.seed},
              {"t_raw", m.gen.t_raw},
              {"h_raw", m.gen.h_raw},
              {"w_raw", m.gen.w_raw},
              {"channels", m.gen.channels},
              {"noise", m.gen.noise},
              {"train_per_class", m.gen.train_per_class},
              {"val_per_class", m.gen.val_per_class},
              {"families", m.gen.families}}},
            {"classes", classes}};
  return j.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: invalid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    j.at("dataset_id").get_to(m.dataset_id);
    j.at("generator_version").get_to(m.generator_version);
    const json& g = j.at("gen");
    g.at("seed").get_to(m.gen.seed);
    g.at("t_raw").get_to(m.gen.t_raw);
    g.at("h_raw").get_to(m.gen.h_raw);
    g.at("w_raw").get_to(m.gen.w_raw);
    g.at("channels").get_to(m.gen.channels);
    g.at("noise").get_to(m.gen.noise);
    g.at("train_per_class").get_to(m.gen.train_per_class);
    g.at("val_per_class").get_to(m.gen.val_per_class);
    g.at("families").get_to(m.gen.families);
    for (const json& c : j.at("classes")) {
      ClassSpec spec;
      c.at("class_id").get_to(spec.class_id);
      c.at("name").get_to(spec.name);
      c.at("family").get_to(spec.family);
      c.at("shapes").get_to(spec.shapes);
      c.at("color").get_to(spec.color);
      c.at("axis").get_to(spec.axis);
      m.classes.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: missing or bad field: ") + e.what());
  }
  return m;
}

void write_sample_file(const std::string& path, const VideoSample& s) {
  json header = {{"shape", {s.t_raw, s.h, s.w, s.c}},
                 {"dtype", "float32"},
                 {"order", "row_major"},
                 {"class_id", s.class_id},
                 {"sample_seed", s.sample_seed},
                 {"video_id", s.video_id}};
  std::string buf = header.dump();
  buf += '\n';
  append_f32(buf, s.frames.data(), s.frames.size());
  write_text_file(path, buf);
}

VideoSample read_sample_file(const std::string& path) {
  std::string content = read_text_file(path);
  auto [header_text, offset] = split_header_line(content);
  json h;
  try {
    h = json::parse(header_text);
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": bad sample header: " + e.what());
  }
  VideoSample s;
  try {
    std::vector<int> shape = h.at("shape").get<std::vector<int>>();
    if (shape.size() != 4) throw IntegrityError(path + ": sample shape must be rank 4");
    if (h.at("dtype").get<std::string>() != "float32")
      throw IntegrityError(path + ": unsupported dtype");
    s.t_raw = shape[0];
    s.h = shape[1];
    s.w = shape[2];
    s.c = shape[3];
    h.at("class_id").get_to(s.class_id);
    h.at("sample_seed").get_to(s.sample_seed);
    h.at("video_id").get_to(s.video_id);
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": bad sample header: " + e.what());
  }
  size_t n = static_cast<size_t>(s.t_raw) * s.h * s.w * s.c;
  if (content.size() - offset != n * sizeof(float))
    throw IntegrityError(path + ": payload size mismatch");
  s.frames = read_f32(content, offset, n);
  return s;
}

namespace {
std::string sample_filename(int class_id, int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%02d_%03d.vtn", class_id, idx);
  return buf;
}
}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds, bool force) {
  fs::path root(dir);
  if (fs::exists(root / "manifest.json") && !force)
    throw DataError("dataset already exists at " + dir + " (use force to overwrite)");
  fs::create_directories(root / "train");
  fs::create_directories(root / "val");
  write_text_file((root / "manifest.json").string(), manifest_to_json(ds.manifest));
  for (size_t i = 0; i < ds.manifest.classes.size(); ++i) {
    const ClassSpec& spec = ds.manifest.classes[i];
    for (int k = 0; k < ds.manifest.gen.train_per_class; ++k)
      write_sample_file(
          (root / "train" / sample_filename(spec.class_id, k)).string(),
          ds.train[i * ds.manifest.gen.train_per_class + static_cast<size_t>(k)]);
    for (int k = 0; k < ds.manifest.gen.val_per_class; ++k)
      write_sample_file(
          (root / "val" / sample_filename(spec.class_id, k)).string(),
          ds.val[i * ds.manifest.gen.val_per_class + static_cast<size_t>(k)]);
  }
}

Dataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  Dataset ds;
  ds.manifest = manifest_from_json(read_text_file((root / "manifest.json").string()));
  for (const ClassSpec& spec : ds.manifest.classes) {
    for (int k = 0; k < ds.manifest.gen.train_per_class; ++k)
      ds.train.push_back(
          read_sample_file((root / "train" / sample_filename(spec.class_id, k)).string()));
    for (int k = 0; k < ds.manifest.gen.val_per_class; ++k)
      ds.val.push_back(
          read_sample_file((root / "val" / sample_filename(spec.class_id, k)).string()));
  }
  return ds;
}

std::vector<std::string> class_names(const std::vector<ClassSpec>& classes) {
  std::vector<std::string> out;
  out.reserve(classes.size());
  for (const ClassSpec& c : classes) out.push_back(c.name);
  return out;
}

}  // namespace vtc
