#include <doctest.h>

#include <algorithm>

#include "vtc/tokenizer.hpp"

using namespace vtc;

TEST_CASE("vocabulary contents from classes and template") {
  Vocabulary v = build_tokenizer({"jump"}, "a photo of a <category>", 16);
  for (const char* w : {"a", "photo", "of", "jump"})
    CHECK(v.word_to_id.count(w) == 1);
  CHECK(v.id_to_word[0] == "<pad>");
  CHECK(v.id_to_word[1] == "<bos>");
  CHECK(v.id_to_word[2] == "<eos>");
  // words occupy ids 3.. in sorted order
  std::vector<std::string> words(v.id_to_word.begin() + 3, v.id_to_word.end());
  CHECK(std::is_sorted(words.begin(), words.end()));
}

TEST_CASE("vocabulary is order-invariant over class lists") {
  Vocabulary a =
      build_tokenizer({"circle then square", "square then circle"}, "a <category>", 16);
  Vocabulary b =
      build_tokenizer({"square then circle", "circle then square"}, "a <category>", 16);
  CHECK(a.id_to_word == b.id_to_word);
}

TEST_CASE("empty class set is rejected") {
  CHECK_THROWS_AS(build_tokenizer({}, "a photo of a <category>", 16), EmptyClassSet);
}

TEST_CASE("tokenize shape and EOS index") {
  Vocabulary v = build_tokenizer({"jump"}, "a photo of a <category>", 8);
  TokenSequence seq = tokenize("a photo of a jump", v);
  CHECK(seq.ids.size() == 8);
  CHECK(seq.eos_index == 6);  // BOS + 5 words puts EOS at position 6
  CHECK(seq.attention_length == 7);
  CHECK(seq.ids[0] == kBosId);
  CHECK(seq.ids[6] == kEosId);
  CHECK(seq.ids[7] == kPadId);
  for (int i = 1; i < 6; ++i) CHECK(seq.ids[static_cast<size_t>(i)] >= 3);
}

TEST_CASE("tokenize is case-insensitive via lowercase convention") {
  Vocabulary v = build_tokenizer({"jump"}, "a photo of a <category>", 8);
  TokenSequence a = tokenize("a photo of a jump", v);
  TokenSequence b = tokenize(to_lower("A PHOTO of a JUMP"), v);
  CHECK(a.ids == b.ids);
}

TEST_CASE("unknown word and overflow errors") {
  Vocabulary v = build_tokenizer({"jump"}, "a photo of a <category>", 8);
  CHECK_THROWS_AS(tokenize("a photo of a sprint", v), UnknownToken);
  CHECK_THROWS_AS(tokenize("a a a a a a a a a", v), TokenOverflow);
}

TEST_CASE("class prompt must fit the token cap at build time") {
  // 5 template words + 2 specials = 7 <= cap is needed
  CHECK_THROWS_AS(build_tokenizer({"jump"}, "a photo of a <category>", 6),
                  TokenOverflow);
  CHECK_NOTHROW(build_tokenizer({"jump"}, "a photo of a <category>", 7));
}

TEST_CASE("render_prompt substitutes the category slot") {
  CHECK(render_prompt("red circle", "a photo of a <category>") ==
        "a photo of a red circle");
  CHECK(render_prompt("x", "<category> only") == "x only");
}

TEST_CASE("split_words handles repeated whitespace") {
  auto w = split_words("  a  b\tc \n");
  CHECK(w == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("empty text still carries BOS and EOS") {
  Vocabulary v = build_tokenizer({"jump"}, "a photo of a <category>", 8);
  TokenSequence seq = tokenize("", v);
  CHECK(seq.ids[0] == kBosId);
  CHECK(seq.ids[1] == kEosId);
  CHECK(seq.eos_index == 1);
  for (size_t i = 2; i < seq.ids.size(); ++i) CHECK(seq.ids[i] == kPadId);
}
