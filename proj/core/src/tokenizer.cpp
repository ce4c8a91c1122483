#include "vtc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace vtc {

namespace {
const char* kPlaceholder = "<category>";
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string render_prompt(const std::string& class_name, const std::string& tmpl) {
  std::string out = tmpl;
  size_t pos = out.find(kPlaceholder);
  if (pos == std::string::npos) return out + " " + class_name;
  out.replace(pos, std::string(kPlaceholder).size(), class_name);
  return out;
}

Vocabulary build_tokenizer(const std::vector<std::string>& class_names,
                           const std::string& tmpl, int max_tokens) {
  if (class_names.empty()) throw EmptyClassSet("build_tokenizer: no class names");
  std::set<std::string> words;
  auto absorb = [&words](const std::string& text) {
    for (const std::string& w : split_words(to_lower(text)))
      if (w != kPlaceholder) words.insert(w);
  };
  absorb(tmpl);
  for (const std::string& c : class_names) absorb(c);

  Vocabulary v;
  v.prompt_template = tmpl;
  v.max_tokens = max_tokens;
  v.id_to_word = {"<pad>", "<bos>", "<eos>"};
  for (const std::string& w : words) v.id_to_word.push_back(w);
  for (size_t i = 0; i < v.id_to_word.size(); ++i)
    v.word_to_id[v.id_to_word[i]] = static_cast<int>(i);

  // every class prompt must fit now rather than failing later at encode time
  for (const std::string& c : class_names) {
    std::string p = render_prompt(to_lower(c), to_lower(tmpl));
    size_t n = split_words(p).size();
    if (static_cast<int>(n) + 2 > max_tokens)
      throw TokenOverflow("class prompt '" + p + "' needs " + std::to_string(n + 2) +
                          " tokens, max is " + std::to_string(max_tokens));
  }
  return v;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
  std::vector<std::string> words = split_words(to_lower(text));
  if (static_cast<int>(words.size()) + 2 > vocab.max_tokens)
    throw TokenOverflow("text '" + text + "' needs " + std::to_string(words.size() + 2) +
                        " tokens, max is " + std::to_string(vocab.max_tokens));
  TokenSequence seq;
  seq.ids.assign(static_cast<size_t>(vocab.max_tokens), kPadId);
  seq.ids[0] = kBosId;
  size_t pos = 1;
  for (const std::string& w : words) {
    auto it = vocab.word_to_id.find(w);
    if (it == vocab.word_to_id.end())
      throw UnknownToken("word '" + w + "' not in vocabulary");
    seq.ids[pos++] = it->second;
  }
  seq.eos_index = static_cast<int>(pos);
  seq.ids[pos] = kEosId;
  seq.attention_length = seq.eos_index + 1;
  return seq;
}

}  // namespace vtc
