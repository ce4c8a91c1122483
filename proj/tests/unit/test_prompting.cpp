#include <cmath>

#include "doctest.h"
#include "vtc/encoders.hpp"
#include "vtc/prompting.hpp"
#include "vtc/rng.hpp"

using namespace vtc;

namespace {

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.embed_dim = 16;
  cfg.vision.image_size = 8;
  cfg.vision.patch_size = 4;
  cfg.vision.layers = 3;
  cfg.vision.heads = 2;
  cfg.vision.mlp_ratio = 2;
  cfg.text.layers = 3;
  cfg.text.heads = 2;
  cfg.text.mlp_ratio = 2;
  cfg.text.max_tokens = 12;
  cfg.text.vocab_size = 9;
  cfg.seed = 5;
  return cfg;
}

PromptConfig banks(int nv, int nt, int depth) {
  PromptConfig p;
  p.n_vision_tokens = nv;
  p.n_text_tokens = nt;
  p.depth = depth;
  return p;
}

Tensor rand3d(int b, int s, int d, uint64_t seed) {
  Rng rng(seed, "tok");
  Tensor t({b, s, d});
  for (double& v : t.data) v = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("prompt name predicate") {
  CHECK(is_prompt_name("prompt.vision.0"));
  CHECK(is_prompt_name("prompt.text.3"));
  CHECK_FALSE(is_prompt_name("vision.prompt.0"));
  CHECK_FALSE(is_prompt_name("prompts.vision.0"));
  CHECK_FALSE(is_prompt_name(""));
}

TEST_CASE("attaching prompts adds banks without touching the base") {
  ModelConfig cfg = tiny_model();
  ParameterStore base = init_dual_encoder(cfg);
  ParameterStore ps = base;
  PromptConfig pc = banks(3, 2, 2);
  attach_prompts(ps, pc, cfg, 42);

  int added = 0;
  for (const std::string& n : ps.names()) {
    if (!is_prompt_name(n)) {
      // untouched bit-for-bit
      CHECK(ps.entry(n).values == base.entry(n).values);
      continue;
    }
    ++added;
  }
  CHECK(added == 4);
  CHECK(ps.shape("prompt.vision.0") == std::vector<int>{3, 16});
  CHECK(ps.shape("prompt.vision.1") == std::vector<int>{3, 16});
  CHECK(ps.shape("prompt.text.0") == std::vector<int>{2, 16});
  CHECK(ps.shape("prompt.text.1") == std::vector<int>{2, 16});
  CHECK_FALSE(ps.has("prompt.vision.2"));

  // same seed reproduces the same values; attach over existing banks is an error
  ParameterStore again = base;
  attach_prompts(again, pc, cfg, 42);
  CHECK(again == ps);
  CHECK_THROWS_AS(attach_prompts(ps, pc, cfg, 42), DuplicateParameter);
}

TEST_CASE("depth one adds exactly one bank per tower") {
  ModelConfig cfg = tiny_model();
  ParameterStore ps = init_dual_encoder(cfg);
  attach_prompts(ps, banks(4, 4, 1), cfg, 1);
  int added = 0;
  for (const std::string& n : ps.names())
    if (is_prompt_name(n)) ++added;
  CHECK(added == 2);
}

TEST_CASE("attach validates the depth window") {
  ModelConfig cfg = tiny_model();
  ParameterStore ps = init_dual_encoder(cfg);
  CHECK_THROWS_AS(attach_prompts(ps, banks(2, 2, 4), cfg, 1), ConfigError);
  CHECK_THROWS_AS(attach_prompts(ps, banks(-1, 2, 2), cfg, 1), ConfigError);
}

TEST_CASE("zero-token prompting is an exact identity") {
  ModelConfig cfg = tiny_model();
  ParameterStore ps = init_dual_encoder(cfg);
  Rng rng(9, "px");
  Tensor frames({2, 8 * 8 * 3});
  for (double& v : frames.data) v = rng.uniform();

  PromptConfig none = banks(0, 0, 2);
  Tensor plain = encode_frames_values(ps, cfg, frames, nullptr);
  Tensor empty = encode_frames_values(ps, cfg, frames, &none);
  for (int64_t i = 0; i < plain.numel(); ++i) CHECK(plain.data[i] == empty.data[i]);
}

TEST_CASE("injection prepends at the input layer and keeps content") {
  Tensor tokens = rand3d(2, 4, 6, 3);
  Rng rng(4, "bank");
  Tensor bank({3, 6});
  for (double& v : bank.data) v = rng.normal();

  Tensor out = inject(0, tokens, bank, 2);
  CHECK(out.shape == std::vector<int>{2, 7, 6});
  for (int b = 0; b < 2; ++b) {
    for (int r = 0; r < 3; ++r)
      for (int d = 0; d < 6; ++d) CHECK(out.at(b, r, d) == bank.at(r, d));
    for (int r = 0; r < 4; ++r)
      for (int d = 0; d < 6; ++d) CHECK(out.at(b, 3 + r, d) == tokens.at(b, r, d));
  }
}

TEST_CASE("injection replaces the front rows at deeper prompted layers") {
  Tensor tokens = rand3d(2, 5, 6, 13);
  Rng rng(14, "bank");
  Tensor bank({2, 6});
  for (double& v : bank.data) v = rng.normal();

  Tensor out = inject(1, tokens, bank, 3);
  CHECK(out.shape == tokens.shape);
  for (int b = 0; b < 2; ++b) {
    for (int r = 0; r < 2; ++r)
      for (int d = 0; d < 6; ++d) CHECK(out.at(b, r, d) == bank.at(r, d));
    for (int r = 2; r < 5; ++r)
      for (int d = 0; d < 6; ++d) CHECK(out.at(b, r, d) == tokens.at(b, r, d));
  }
}

TEST_CASE("injection past the prompt depth propagates untouched") {
  Tensor tokens = rand3d(1, 4, 6, 21);
  Tensor bank({2, 6});
  for (double& v : bank.data) v = 99.0;
  Tensor out = inject(2, tokens, bank, 2);
  for (int64_t i = 0; i < tokens.numel(); ++i) CHECK(out.data[i] == tokens.data[i]);
}

TEST_CASE("injection shape guards") {
  Tensor tokens = rand3d(1, 4, 6, 2);
  Tensor wrong_width({2, 5});
  CHECK_THROWS_AS(inject(0, tokens, wrong_width, 2), ShapeError);
  Tensor too_long({5, 6});
  CHECK_THROWS_AS(inject(1, tokens, too_long, 2), ShapeError);
  Tensor flat({4, 6});
  Tensor bank({2, 6});
  CHECK_THROWS_AS(inject(0, flat, bank, 2), ShapeError);
}

TEST_CASE("freeze mask marks exactly the prompt banks trainable") {
  ModelConfig cfg = tiny_model();
  ParameterStore ps = init_dual_encoder(cfg);
  CHECK_THROWS_AS(freeze_base(ps), ConfigError);

  PromptConfig pc = banks(3, 2, 2);
  attach_prompts(ps, pc, cfg, 7);
  FreezeMask mask = freeze_base(ps);
  for (const std::string& n : ps.names())
    CHECK(mask.trainable(n) == is_prompt_name(n));
  CHECK(mask.trainable_count(ps) == 2 * (3 + 2) * 16);
}

TEST_CASE("prompted text encoding still reads the true EOS") {
  std::vector<std::string> classes = {"red glow", "slow wide blue arc"};
  Vocabulary vocab = build_tokenizer(classes, kDefaultPromptTemplate, 14);
  ModelConfig cfg = tiny_model();
  cfg.text.max_tokens = 14;
  cfg.text.vocab_size = vocab.size();
  ParameterStore ps = init_dual_encoder(cfg);
  PromptConfig pc = banks(2, 3, 2);
  attach_prompts(ps, pc, cfg, 11);

  std::vector<TokenSequence> seqs = {
      tokenize(render_prompt(classes[0], vocab.prompt_template), vocab),
      tokenize(render_prompt(classes[1], vocab.prompt_template), vocab)};
  Tensor base = encode_text_values(ps, cfg, seqs, &pc);
  CHECK(base.shape == std::vector<int>{2, cfg.embed_dim});
  for (double v : base.data) CHECK(std::isfinite(v));

  // prompted and unprompted paths disagree (prompts actually participate)
  Tensor plain = encode_text_values(ps, cfg, seqs, nullptr);
  double diff = 0;
  for (int64_t i = 0; i < base.numel(); ++i) diff += std::abs(base.data[i] - plain.data[i]);
  CHECK(diff > 1e-6);

  // PAD tail still unreachable after the EOS readout shift
  ParameterStore poked = ps;
  auto& emb = poked.entry_mut("text.token_embed").values;
  for (int d = 0; d < cfg.embed_dim; ++d)
    emb[static_cast<size_t>(kPadId * cfg.embed_dim + d)] -= 50.0f;
  Tensor after = encode_text_values(poked, cfg, seqs, &pc);
  for (int64_t i = 0; i < base.numel(); ++i) CHECK(after.data[i] == base.data[i]);
}

TEST_CASE("prompted window check rejects prompts that crowd out a class") {
  std::vector<std::string> classes = {"one", "two three four"};
  Vocabulary vocab = build_tokenizer(classes, kDefaultPromptTemplate, 12);
  // longest rendered prompt: "a photo of a two three four" = 7 words
  PromptConfig ok = banks(2, 5, 1);
  validate_prompted_vocab(vocab, classes, ok);
  PromptConfig tight = banks(2, 6, 1);
  CHECK_THROWS_AS(validate_prompted_vocab(vocab, classes, tight), ConfigError);
}
