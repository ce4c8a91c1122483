#include <unistd.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "vtc/checkpoint.hpp"
#include "vtc/encoders.hpp"
#include "vtc/io.hpp"
#include "vtc/prompting.hpp"
#include "vtc/report.hpp"
#include "vtc/rng.hpp"

using namespace vtc;

namespace {

struct TempDir {
  std::string path;
  TempDir() {
    path = "/tmp/vtc_ckpt_" + std::to_string(::getpid()) + "_" +
           std::to_string(reinterpret_cast<uintptr_t>(this));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

Model demo_model() {
  Model m;
  m.vocab = build_tokenizer({"red circle", "blue square"}, kDefaultPromptTemplate, 12);
  m.config.embed_dim = 16;
  m.config.vision.image_size = 8;
  m.config.vision.patch_size = 4;
  m.config.vision.layers = 2;
  m.config.vision.heads = 2;
  m.config.vision.mlp_ratio = 2;
  m.config.text.layers = 2;
  m.config.text.heads = 2;
  m.config.text.mlp_ratio = 2;
  m.config.text.max_tokens = 12;
  m.config.text.vocab_size = m.vocab.size();
  m.config.seed = 11;
  m.params = init_dual_encoder(m.config);
  return m;
}

std::vector<StageProvenance> demo_provenance() {
  return {{1, "full_ft", "deadbeef01234567", 3, 1.25, 42},
          {2, "prompt_only", "cafe0000cafe0000", 2, 0.5, 43}};
}

Tensor random_frames(int rows, int pixels, uint64_t seed) {
  Tensor t({rows, pixels});
  Rng r(seed);
  for (double& v : t.data) v = r.uniform();
  return t;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact and functionally identical") {
  TempDir td;
  Model m = demo_model();
  std::string p = td.file("model.ckpt");
  save_checkpoint(p, m, demo_provenance());

  LoadedCheckpoint lc = load_checkpoint(p);
  CHECK(lc.model.params == m.params);
  CHECK(lc.model.config.embed_dim == 16);
  CHECK(lc.model.config.vision.patch_size == 4);
  CHECK(lc.model.config.text.vocab_size == m.config.text.vocab_size);
  CHECK(lc.model.config.seed == 11);
  CHECK_FALSE(lc.model.prompted);
  CHECK(lc.model.vocab.id_to_word == m.vocab.id_to_word);
  CHECK(lc.model.vocab.word_to_id == m.vocab.word_to_id);
  CHECK(lc.model.vocab.prompt_template == m.vocab.prompt_template);
  CHECK(lc.model.vocab.max_tokens == 12);
  CHECK(lc.payload_digest.size() == 16);

  REQUIRE(lc.provenance.size() == 2);
  CHECK(lc.provenance[0].stage == 1);
  CHECK(lc.provenance[0].regime == "full_ft");
  CHECK(lc.provenance[0].config_digest == "deadbeef01234567");
  CHECK(lc.provenance[0].epochs == 3);
  CHECK(lc.provenance[0].final_loss == 1.25);
  CHECK(lc.provenance[0].seed == 42);
  CHECK(lc.provenance[1].regime == "prompt_only");

  // the reloaded model scores inputs bit-identically
  Tensor frames = random_frames(3, 8 * 8 * 3, 5);
  Tensor e0 = encode_frames_values(m.params, m.config, frames);
  Tensor e1 = encode_frames_values(lc.model.params, lc.model.config, frames);
  CHECK(e0.data == e1.data);
  std::vector<TokenSequence> seqs = {tokenize("a photo of a red circle", m.vocab)};
  Tensor t0 = encode_text_values(m.params, m.config, seqs);
  Tensor t1 = encode_text_values(lc.model.params, lc.model.config, seqs);
  CHECK(t0.data == t1.data);
}

TEST_CASE("prompted checkpoints carry their banks and flags") {
  TempDir td;
  Model m = demo_model();
  PromptConfig pc{3, 2, 2, 0.02};
  attach_prompts(m.params, pc, m.config, 9);
  m.prompts = pc;
  m.prompted = true;

  std::string p = td.file("prompted.ckpt");
  save_checkpoint(p, m, demo_provenance());
  LoadedCheckpoint lc = load_checkpoint(p);
  CHECK(lc.model.prompted);
  CHECK(lc.model.prompts.n_vision_tokens == 3);
  CHECK(lc.model.prompts.n_text_tokens == 2);
  CHECK(lc.model.prompts.depth == 2);
  CHECK(lc.model.params.has("prompt.vision.1"));
  CHECK(lc.model.params == m.params);
}

TEST_CASE("checkpoint loading rejects damage") {
  TempDir td;
  Model m = demo_model();
  std::string p = td.file("model.ckpt");
  save_checkpoint(p, m, demo_provenance());
  std::string content = read_text_file(p);
  size_t nl = content.find('\n');
  REQUIRE(nl != std::string::npos);

  SUBCASE("flipped payload byte") {
    std::string bad = content;
    bad[nl + 1 + 40] = static_cast<char>(bad[nl + 1 + 40] ^ 0x01);
    write_text_file(p, bad);
    CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  }
  SUBCASE("truncated payload") {
    write_text_file(p, content.substr(0, content.size() - 2));
    CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  }
  SUBCASE("header is not json") {
    write_text_file(p, "not json\n");
    CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  }
  SUBCASE("unsupported format version") {
    write_text_file(p, "{\"format_version\":2}\n");
    CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  }
  SUBCASE("missing header field") {
    write_text_file(p, "{\"format_version\":1}\n");
    CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  }
}

TEST_CASE("vocabulary identity check") {
  Vocabulary a = build_tokenizer({"red circle"}, kDefaultPromptTemplate, 10);
  Vocabulary b = a;
  CHECK_NOTHROW(require_same_vocab(a, b));

  Vocabulary extra = a;
  extra.id_to_word.push_back("zebra");
  CHECK_THROWS_AS(require_same_vocab(a, extra), VocabError);

  Vocabulary tmpl = a;
  tmpl.prompt_template = "<category>";
  CHECK_THROWS_AS(require_same_vocab(a, tmpl), VocabError);

  Vocabulary cap = a;
  cap.max_tokens = 11;
  CHECK_THROWS_AS(require_same_vocab(a, cap), VocabError);
}

TEST_CASE("embedding dump round trip preserves every row") {
  TempDir td;
  EmbeddingDump d;
  d.dim = 3;
  d.class_names = {"red circle", "blue square"};
  d.checkpoint_digest = "0123456789abcdef";
  d.video_ids = {"v0", "", "a_much_longer_video_identifier"};
  d.class_ids = {15, 0, 7};
  d.embeddings = Tensor({3, 3});
  for (int i = 0; i < 9; ++i) d.embeddings.data[static_cast<size_t>(i)] = i * 0.125 - 0.5;

  std::string p = td.file("emb.bin");
  save_embedding_dump(p, d);
  EmbeddingDump r = load_embedding_dump(p);
  CHECK(r.dim == 3);
  CHECK(r.class_names == d.class_names);
  CHECK(r.checkpoint_digest == d.checkpoint_digest);
  CHECK(r.video_ids == d.video_ids);
  CHECK(r.class_ids == d.class_ids);
  CHECK(r.embeddings.shape == d.embeddings.shape);
  CHECK(r.embeddings.data == d.embeddings.data);  // values chosen float-exact
}

TEST_CASE("embedding dump handles the empty case and rejects bad input") {
  TempDir td;
  EmbeddingDump empty;
  empty.dim = 5;
  std::string p = td.file("empty.bin");
  save_embedding_dump(p, empty);
  EmbeddingDump r = load_embedding_dump(p);
  CHECK(r.dim == 5);
  CHECK(r.video_ids.empty());
  CHECK(r.embeddings.data.empty());

  EmbeddingDump bad;
  bad.dim = 2;
  bad.video_ids = {"a"};
  bad.class_ids = {};  // row count mismatch
  bad.embeddings = Tensor({1, 2});
  CHECK_THROWS_AS(save_embedding_dump(td.file("x.bin"), bad), ShapeError);
  bad.class_ids = {1};
  bad.embeddings = Tensor({1, 3});  // dim mismatch
  CHECK_THROWS_AS(save_embedding_dump(td.file("x.bin"), bad), ShapeError);
}

TEST_CASE("embedding dump detects byte-level damage") {
  TempDir td;
  EmbeddingDump d;
  d.dim = 2;
  d.video_ids = {"v"};
  d.class_ids = {3};
  d.embeddings = Tensor::from_vec({1, 2}, {0.5, -0.5});
  std::string p = td.file("emb.bin");
  save_embedding_dump(p, d);
  std::string content = read_text_file(p);

  write_text_file(p, content + "x");
  CHECK_THROWS_AS(load_embedding_dump(p), IntegrityError);
  write_text_file(p, content.substr(0, content.size() - 3));
  CHECK_THROWS_AS(load_embedding_dump(p), IntegrityError);
  write_text_file(p, "{\"dim\":2}\n");
  CHECK_THROWS_AS(load_embedding_dump(p), IntegrityError);
  write_text_file(p, "{\"count\":-1,\"dim\":2,\"class_names\":[],"
                     "\"checkpoint_digest\":\"\"}\n");
  CHECK_THROWS_AS(load_embedding_dump(p), IntegrityError);
}

TEST_CASE("loss curve file round trip") {
  TempDir td;
  TrainResult tr;
  tr.curve = {{0, 0, 2.0794415416798357, 5e-4, 1.75, 2.64},
              {0, 1, 1.5, 4e-4, 0.5, 2.6},
              {1, 2, 0.75, 1e-4, 0.25, 2.55}};
  tr.final_loss = 0.75;
  tr.steps = 3;

  std::string p = td.file("curve.json");
  save_loss_curve(p, tr, "abc123", 77);
  std::string digest;
  uint64_t seed = 0;
  TrainResult r = load_loss_curve(p, &digest, &seed);
  CHECK(digest == "abc123");
  CHECK(seed == 77);
  CHECK(r.steps == 3);
  CHECK(r.final_loss == 0.75);
  REQUIRE(r.curve.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(r.curve[i].epoch == tr.curve[i].epoch);
    CHECK(r.curve[i].step == tr.curve[i].step);
    CHECK(r.curve[i].loss == tr.curve[i].loss);
    CHECK(r.curve[i].lr == tr.curve[i].lr);
    CHECK(r.curve[i].grad_norm == tr.curve[i].grad_norm);
    CHECK(r.curve[i].logit_scale == tr.curve[i].logit_scale);
  }
  CHECK_NOTHROW(load_loss_curve(p));  // out params optional

  write_text_file(p, "nope");
  CHECK_THROWS_AS(load_loss_curve(p), DataError);
  write_text_file(p, "{}");
  CHECK_THROWS_AS(load_loss_curve(p), DataError);
}

TEST_CASE("metric table sorts rows and formats spread columns") {
  SplitMetrics base;
  base.top5 = 90;
  base.sample_count = 18;

  ReportRow alpha{"m_alpha", base, {}, 1};
  alpha.mean.hm = 20;
  alpha.mean.top1 = 50;
  ReportRow bravo{"m_bravo", base, {}, 1};
  bravo.mean.hm = 30;
  bravo.mean.top1 = 10;
  ReportRow charlie{"m_charlie", base, {}, 1};
  charlie.mean.hm = 20;
  charlie.mean.top1 = 60;

  std::string plain = render_metric_table({alpha, bravo, charlie});
  CHECK(plain.find("m_bravo") < plain.find("m_charlie"));
  CHECK(plain.find("m_charlie") < plain.find("m_alpha"));
  CHECK(plain.find("top1") != std::string::npos);
  CHECK(plain.find("vmeas") != std::string::npos);
  CHECK(plain.find("±") == std::string::npos);
  CHECK(plain.find("  18") != std::string::npos);

  // full tie falls back to label order
  ReportRow zz{"zz_method", base, {}, 1};
  ReportRow aa{"aa_method", base, {}, 1};
  std::string tied = render_metric_table({zz, aa});
  CHECK(tied.find("aa_method") < tied.find("zz_method"));

  // aggregated rows show mean±std; singleton rows in the same table do not
  ReportRow agg{"m_agg", base, {}, 3};
  agg.mean.hm = 40;
  agg.stddev.hm = 2.5;
  agg.mean.homogeneity = 0.5;
  std::string spread = render_metric_table({agg, alpha});
  size_t agg_pos = spread.find("m_agg");
  size_t agg_end = spread.find('\n', agg_pos);
  std::string agg_line = spread.substr(agg_pos, agg_end - agg_pos);
  CHECK(agg_line.find("±") != std::string::npos);
  CHECK(agg_line.find("40.00±2.50") != std::string::npos);
  CHECK(agg_line.find("50.00") != std::string::npos);  // unitless ratios in percent
  size_t a_pos = spread.find("m_alpha");
  std::string a_line = spread.substr(a_pos, spread.find('\n', a_pos) - a_pos);
  CHECK(a_line.find("±") == std::string::npos);
}

TEST_CASE("image primitives clip and fill") {
  Image img;
  img.w = 4;
  img.h = 2;
  img.rgb.assign(4 * 2 * 3, 0);
  img.fill(7, 8, 9);
  CHECK(img.rgb[0] == 7);
  CHECK(img.rgb[img.rgb.size() - 1] == 9);
  img.set(1, 1, 1, 2, 3);
  CHECK(img.rgb[3 * (1 * 4 + 1)] == 1);
  std::vector<uint8_t> before = img.rgb;
  img.set(-1, 0, 255, 255, 255);
  img.set(4, 0, 255, 255, 255);
  img.set(0, 2, 255, 255, 255);
  CHECK(img.rgb == before);
}

TEST_CASE("line plot draws axes and series deterministically") {
  Series s;
  s.name = "loss";
  for (int i = 0; i < 10; ++i) {
    s.x.push_back(i);
    s.y.push_back(1.0 / (1 + i));
  }
  Image img = render_line_plot({s}, 64, 64);
  CHECK(img.w == 64);
  CHECK(img.h == 64);

  auto px = [&](int x, int y) {
    size_t i = 3 * (static_cast<size_t>(y) * 64 + x);
    return std::array<uint8_t, 3>{img.rgb[i], img.rgb[i + 1], img.rgb[i + 2]};
  };
  CHECK(px(0, 0) == std::array<uint8_t, 3>{255, 255, 255});  // margin stays blank
  CHECK(px(12, 12) == std::array<uint8_t, 3>{0, 0, 0});      // axes corner
  CHECK(px(12, 52) == std::array<uint8_t, 3>{0, 0, 0});

  int series_pixels = 0;
  for (size_t i = 0; i + 2 < img.rgb.size(); i += 3)
    if (img.rgb[i] == 31 && img.rgb[i + 1] == 119 && img.rgb[i + 2] == 180)
      ++series_pixels;
  CHECK(series_pixels > 0);

  Image again = render_line_plot({s}, 64, 64);
  CHECK(again.rgb == img.rgb);

  Series flat{"flat", {0, 1, 2}, {3, 3, 3}};
  CHECK_NOTHROW(render_line_plot({flat}, 64, 64));
  Series dot{"dot", {0.5}, {0.5}};
  Image point = render_line_plot({dot}, 64, 64);
  int dot_pixels = 0;
  for (size_t i = 0; i + 2 < point.rgb.size(); i += 3)
    if (point.rgb[i] == 31 && point.rgb[i + 1] == 119 && point.rgb[i + 2] == 180)
      ++dot_pixels;
  CHECK(dot_pixels >= 9);

  Series second{"acc", {0, 1}, {0, 1}};
  Image two = render_line_plot({s, second}, 64, 64);
  bool orange = false;
  for (size_t i = 0; i + 2 < two.rgb.size(); i += 3)
    if (two.rgb[i] == 255 && two.rgb[i + 1] == 127 && two.rgb[i + 2] == 14)
      orange = true;
  CHECK(orange);

  CHECK_THROWS_AS(render_line_plot({s}, 16, 64), ConfigError);
  Series bad{"bad", {0, 1}, {0}};
  CHECK_THROWS_AS(render_line_plot({bad}, 64, 64), ShapeError);
}

TEST_CASE("bmp writer emits the exact classic layout") {
  TempDir td;
  Image img;
  img.w = 3;
  img.h = 2;
  img.rgb.assign(3 * 2 * 3, 0);
  uint8_t v = 1;
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      img.set(x, y, v, static_cast<uint8_t>(v + 1), static_cast<uint8_t>(v + 2));
      v = static_cast<uint8_t>(v + 3);
    }

  std::string p = td.file("plot.bmp");
  write_bmp(p, img);
  std::string f = read_text_file(p);
  auto b = [&](size_t i) { return static_cast<uint8_t>(f[i]); };

  REQUIRE(f.size() == 78);  // 54 header + 2 rows of (9 data + 3 pad)
  CHECK(f[0] == 'B');
  CHECK(f[1] == 'M');
  CHECK(b(2) == 78);  // little-endian file size
  CHECK(b(3) == 0);
  CHECK(b(10) == 54);  // pixel data offset
  CHECK(b(18) == 3);   // width
  CHECK(b(22) == 2);   // height
  CHECK(b(28) == 24);  // bits per pixel

  // bottom row first, BGR per pixel, rows padded to 4 bytes
  const uint8_t expect[24] = {12, 11, 10, 15, 14, 13, 18, 17, 16, 0, 0, 0,
                              3,  2,  1,  6,  5,  4,  9,  8,  7,  0, 0, 0};
  for (size_t i = 0; i < 24; ++i) CHECK(b(54 + i) == expect[i]);

  Image broken;
  broken.w = 2;
  broken.h = 2;
  broken.rgb.assign(3, 0);
  CHECK_THROWS_AS(write_bmp(td.file("bad.bmp"), broken), ShapeError);
}
