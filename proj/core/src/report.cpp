#include "vtc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "vtc/io.hpp"
#include <json.hpp>

namespace vtc {

using nlohmann::json;

void save_embedding_dump(const std::string& path, const EmbeddingDump& dump) {
  int n = static_cast<int>(dump.video_ids.size());
  bool rows_ok = n == 0 ? dump.embeddings.data.empty()
                        : dump.embeddings.ndim() == 2 &&
                              dump.embeddings.dim(0) == n &&
                              dump.embeddings.dim(1) == dump.dim;
  if (static_cast<int>(dump.class_ids.size()) != n || !rows_ok)
    throw ShapeError("embedding dump: inconsistent row data");
  json header = {{"count", n},
                 {"dim", dump.dim},
                 {"class_names", dump.class_names},
                 {"checkpoint_digest", dump.checkpoint_digest}};
  std::string payload;
  std::vector<float> row(static_cast<size_t>(dump.dim));
  for (int i = 0; i < n; ++i) {
    const std::string& id = dump.video_ids[static_cast<size_t>(i)];
    append_i32(payload, static_cast<int32_t>(id.size()));
    payload.append(id);
    append_i32(payload, dump.class_ids[static_cast<size_t>(i)]);
    for (int j = 0; j < dump.dim; ++j)
      row[static_cast<size_t>(j)] = static_cast<float>(dump.embeddings.at(i, j));
    append_f32(payload, row.data(), row.size());
  }
  write_text_file(path, header.dump() + "\n" + payload);
}

EmbeddingDump load_embedding_dump(const std::string& path) {
  std::string content = read_text_file(path);
  auto [header_text, start] = split_header_line(content);
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("embedding dump header: ") + e.what());
  }
  EmbeddingDump dump;
  int n = 0;
  try {
    header.at("count").get_to(n);
    header.at("dim").get_to(dump.dim);
    header.at("class_names").get_to(dump.class_names);
    header.at("checkpoint_digest").get_to(dump.checkpoint_digest);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("embedding dump header: ") + e.what());
  }
  if (n < 0 || dump.dim <= 0)
    throw IntegrityError("embedding dump header: bad count/dim");
  if (n > 0) dump.embeddings = Tensor({n, dump.dim});
  std::string payload = content.substr(start);
  size_t off = 0;
  for (int i = 0; i < n; ++i) {
    int32_t len = read_i32(payload, off);
    off += sizeof(int32_t);
    if (len < 0 || off + static_cast<size_t>(len) > payload.size())
      throw IntegrityError("embedding dump: bad video id length");
    dump.video_ids.push_back(payload.substr(off, static_cast<size_t>(len)));
    off += static_cast<size_t>(len);
    dump.class_ids.push_back(read_i32(payload, off));
    off += sizeof(int32_t);
    std::vector<float> row = read_f32(payload, off, static_cast<size_t>(dump.dim));
    off += static_cast<size_t>(dump.dim) * sizeof(float);
    for (int j = 0; j < dump.dim; ++j)
      dump.embeddings.at(i, j) = static_cast<double>(row[static_cast<size_t>(j)]);
  }
  if (off != payload.size())
    throw IntegrityError("embedding dump: trailing bytes after declared rows");
  return dump;
}

void save_loss_curve(const std::string& path, const TrainResult& result,
                     const std::string& config_digest, uint64_t seed) {
  json steps = json::array();
  for (const StepLog& s : result.curve)
    steps.push_back({{"epoch", s.epoch},
                     {"step", s.step},
                     {"loss", s.loss},
                     {"lr", s.lr},
                     {"grad_norm", s.grad_norm},
                     {"logit_scale", s.logit_scale}});
  json j = {{"config_digest", config_digest},
            {"seed", seed},
            {"final_loss", result.final_loss},
            {"steps", steps}};
  write_text_file(path, j.dump(2));
}

TrainResult load_loss_curve(const std::string& path, std::string* config_digest,
                            uint64_t* seed) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError(std::string("loss curve: invalid JSON: ") + e.what());
  }
  TrainResult r;
  try {
    if (config_digest) j.at("config_digest").get_to(*config_digest);
    if (seed) j.at("seed").get_to(*seed);
    j.at("final_loss").get_to(r.final_loss);
    for (const json& s : j.at("steps")) {
      StepLog log;
      s.at("epoch").get_to(log.epoch);
      s.at("step").get_to(log.step);
      s.at("loss").get_to(log.loss);
      s.at("lr").get_to(log.lr);
      s.at("grad_norm").get_to(log.grad_norm);
      s.at("logit_scale").get_to(log.logit_scale);
      r.curve.push_back(log);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("loss curve: missing field: ") + e.what());
  }
  r.steps = static_cast<int>(r.curve.size());
  return r;
}

std::string render_metric_table(std::vector<ReportRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.mean.hm != b.mean.hm) return a.mean.hm > b.mean.hm;
    if (a.mean.top1 != b.mean.top1) return a.mean.top1 > b.mean.top1;
    return a.label < b.label;
  });
  bool any_std = false;
  for (const ReportRow& r : rows)
    if (r.split_count > 1) any_std = true;

  size_t label_w = 6;
  for (const ReportRow& r : rows) label_w = std::max(label_w, r.label.size());

  auto cell = [&](double mean, double sd, int splits) {
    char buf[48];
    if (any_std && splits > 1)
      std::snprintf(buf, sizeof(buf), "%7.2f±%-5.2f", mean, sd);
    else if (any_std)
      std::snprintf(buf, sizeof(buf), "%7.2f      ", mean);
    else
      std::snprintf(buf, sizeof(buf), "%7.2f", mean);
    return std::string(buf);
  };
  auto head = [&](const char* name) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), any_std ? "%13s" : "%7s", name);
    return std::string(buf);
  };

  std::string out;
  out += std::string(label_w, ' ') + head("top1") + head("top5") + head("base") +
         head("novel") + head("hm") + head("homog") + head("compl") + head("vmeas") +
         "      n\n";
  for (const ReportRow& r : rows) {
    std::string label = r.label;
    label.resize(label_w, ' ');
    out += label;
    out += cell(r.mean.top1, r.stddev.top1, r.split_count);
    out += cell(r.mean.top5, r.stddev.top5, r.split_count);
    out += cell(r.mean.base_acc, r.stddev.base_acc, r.split_count);
    out += cell(r.mean.novel_acc, r.stddev.novel_acc, r.split_count);
    out += cell(r.mean.hm, r.stddev.hm, r.split_count);
    out += cell(100.0 * r.mean.homogeneity, 100.0 * r.stddev.homogeneity,
                r.split_count);
    out += cell(100.0 * r.mean.completeness, 100.0 * r.stddev.completeness,
                r.split_count);
    out += cell(100.0 * r.mean.v_measure, 100.0 * r.stddev.v_measure, r.split_count);
    char tail[16];
    std::snprintf(tail, sizeof(tail), "%7d", r.mean.sample_count);
    out += tail;
    out += '\n';
  }
  return out;
}

void Image::fill(uint8_t r, uint8_t g, uint8_t b) {
  for (size_t i = 0; i + 2 < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
}

void Image::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || y < 0 || x >= w || y >= h) return;
  size_t i = 3 * (static_cast<size_t>(y) * w + x);
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

namespace {
constexpr uint8_t kPalette[6][3] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},
                                    {214, 39, 40},  {148, 103, 189}, {140, 86, 75}};

void draw_line(Image& img, double x0, double y0, double x1, double y1,
               const uint8_t* c) {
  int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
  for (int i = 0; i <= steps; ++i) {
    double t = static_cast<double>(i) / steps;
    int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    img.set(x, y, c[0], c[1], c[2]);
  }
}
}  // namespace

Image render_line_plot(const std::vector<Series>& series, int w, int h) {
  if (w < 32 || h < 32) throw ConfigError("plot: image too small");
  Image img;
  img.w = w;
  img.h = h;
  img.rgb.assign(static_cast<size_t>(w) * h * 3, 255);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool have = false;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size())
      throw ShapeError("plot series '" + s.name + "': x/y length mismatch");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!have) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        have = true;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  int m = 12;  // margin
  const uint8_t black[3] = {0, 0, 0};
  draw_line(img, m, m, m, h - m, black);
  draw_line(img, m, h - m, w - m, h - m, black);
  draw_line(img, w - m, m, w - m, h - m, black);
  draw_line(img, m, m, w - m, m, black);

  auto px = [&](double x) {
    return m + (x - xmin) / (xmax - xmin) * (w - 2 * m);
  };
  auto py = [&](double y) {
    return (h - m) - (y - ymin) / (ymax - ymin) * (h - 2 * m);
  };
  for (size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const uint8_t* c = kPalette[si % 6];
    for (size_t i = 0; i + 1 < s.x.size(); ++i)
      draw_line(img, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), c);
    if (s.x.size() == 1) {
      int x = static_cast<int>(std::lround(px(s.x[0])));
      int y = static_cast<int>(std::lround(py(s.y[0])));
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) img.set(x + dx, y + dy, c[0], c[1], c[2]);
    }
  }
  return img;
}

void write_bmp(const std::string& path, const Image& img) {
  if (img.w <= 0 || img.h <= 0 ||
      img.rgb.size() != static_cast<size_t>(img.w) * img.h * 3)
    throw ShapeError("bmp: inconsistent image buffer");
  int row_bytes = img.w * 3;
  int pad = (4 - row_bytes % 4) % 4;
  uint32_t data_size = static_cast<uint32_t>((row_bytes + pad) * img.h);
  uint32_t file_size = 54 + data_size;

  std::string out;
  out.reserve(file_size);
  auto put16 = [&](uint16_t v) { out.append(reinterpret_cast<char*>(&v), 2); };
  auto put32 = [&](uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); };
  out += "BM";
  put32(file_size);
  put32(0);
  put32(54);
  put32(40);
  put32(static_cast<uint32_t>(img.w));
  put32(static_cast<uint32_t>(img.h));
  put16(1);
  put16(24);
  put32(0);
  put32(data_size);
  put32(2835);
  put32(2835);
  put32(0);
  put32(0);
  for (int y = img.h - 1; y >= 0; --y) {  // bottom-up rows, BGR order
    for (int x = 0; x < img.w; ++x) {
      size_t i = 3 * (static_cast<size_t>(y) * img.w + x);
      out += static_cast<char>(img.rgb[i + 2]);
      out += static_cast<char>(img.rgb[i + 1]);
      out += static_cast<char>(img.rgb[i]);
    }
    out.append(static_cast<size_t>(pad), '\0');
  }
  write_text_file(path, out);
}

}  // namespace vtc
