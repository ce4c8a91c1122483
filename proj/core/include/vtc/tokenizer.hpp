#pragma once

#include <map>
#include <string>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;

inline constexpr const char* kDefaultPromptTemplate = "a photo of a <category>";

struct TokenSequence {
  std::vector<int> ids;  // length max_tokens, PAD-filled tail
  int eos_index = 0;
  int attention_length = 0;  // eos_index + 1
};

// Word-level vocabulary over a closed set of class names plus a prompt
// template.  Ids: PAD=0, BOS=1, EOS=2, then words in sorted order.
struct Vocabulary {
  std::vector<std::string> id_to_word;  // index = id, includes specials
  std::map<std::string, int> word_to_id;
  std::string prompt_template;
  int max_tokens = 0;

  int size() const { return static_cast<int>(id_to_word.size()); }
};

std::vector<std::string> split_words(const std::string& text);
std::string to_lower(const std::string& s);
std::string render_prompt(const std::string& class_name, const std::string& tmpl);

Vocabulary build_tokenizer(const std::vector<std::string>& class_names,
                           const std::string& tmpl, int max_tokens);

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);

}  // namespace vtc
