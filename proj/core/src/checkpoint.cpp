#include "vtc/checkpoint.hpp"

#include <numeric>

#include "vtc/digest.hpp"
#include "vtc/io.hpp"
#include <json.hpp>

namespace vtc {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;

json vocab_json(const Vocabulary& v) {
  return {{"words", v.id_to_word},
          {"prompt_template", v.prompt_template},
          {"max_tokens", v.max_tokens}};
}

Vocabulary vocab_from_json(const json& j) {
  Vocabulary v;
  j.at("words").get_to(v.id_to_word);
  j.at("prompt_template").get_to(v.prompt_template);
  j.at("max_tokens").get_to(v.max_tokens);
  for (size_t i = 0; i < v.id_to_word.size(); ++i)
    v.word_to_id[v.id_to_word[i]] = static_cast<int>(i);
  return v;
}

json provenance_json(const std::vector<StageProvenance>& ps) {
  json arr = json::array();
  for (const StageProvenance& p : ps)
    arr.push_back({{"stage", p.stage},
                   {"regime", p.regime},
                   {"config_digest", p.config_digest},
                   {"epochs", p.epochs},
                   {"final_loss", p.final_loss},
                   {"seed", p.seed}});
  return arr;
}

std::vector<StageProvenance> provenance_from_json(const json& arr) {
  std::vector<StageProvenance> out;
  for (const json& j : arr) {
    StageProvenance p;
    j.at("stage").get_to(p.stage);
    j.at("regime").get_to(p.regime);
    j.at("config_digest").get_to(p.config_digest);
    j.at("epochs").get_to(p.epochs);
    j.at("final_loss").get_to(p.final_loss);
    j.at("seed").get_to(p.seed);
    out.push_back(p);
  }
  return out;
}
}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const std::vector<StageProvenance>& provenance) {
  std::string payload;
  json entries = json::array();
  int64_t offset = 0;  // element offset into the float payload
  for (const std::string& name : model.params.names()) {
    const auto& e = model.params.entry(name);
    entries.push_back({{"name", name},
                       {"shape", e.shape},
                       {"dtype", "float32"},
                       {"offset", offset},
                       {"count", static_cast<int64_t>(e.values.size())}});
    append_f32(payload, e.values.data(), e.values.size());
    offset += static_cast<int64_t>(e.values.size());
  }

  json header = {{"format_version", kFormatVersion},
                 {"model", json::parse(model_config_to_json(model.config))},
                 {"prompted", model.prompted},
                 {"prompts", json::parse(prompt_config_to_json(model.prompts))},
                 {"vocab", vocab_json(model.vocab)},
                 {"provenance", provenance_json(provenance)},
                 {"entries", entries},
                 {"payload_digest", digest_hex(payload)}};
  write_text_file(path, header.dump() + "\n" + payload);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::string content = read_text_file(path);
  auto [header_text, payload_start] = split_header_line(content);
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("checkpoint header: invalid JSON: ") + e.what());
  }

  LoadedCheckpoint out;
  try {
    int version = header.at("format_version").get<int>();
    if (version != kFormatVersion)
      throw IntegrityError("checkpoint format version " + std::to_string(version) +
                           " unsupported (expected " +
                           std::to_string(kFormatVersion) + ")");
    out.model.config = model_config_from_json(header.at("model").dump());
    header.at("prompted").get_to(out.model.prompted);
    out.model.prompts = prompt_config_from_json(header.at("prompts").dump());
    out.model.vocab = vocab_from_json(header.at("vocab"));
    out.provenance = provenance_from_json(header.at("provenance"));

    std::string payload = content.substr(payload_start);
    std::string declared = header.at("payload_digest").get<std::string>();
    std::string actual = digest_hex(payload);
    if (declared != actual)
      throw IntegrityError("checkpoint payload digest mismatch: header says " +
                           declared + ", payload hashes to " + actual);
    out.payload_digest = actual;

    int64_t total = 0;
    for (const json& e : header.at("entries")) {
      std::string name = e.at("name").get<std::string>();
      std::vector<int> shape = e.at("shape").get<std::vector<int>>();
      int64_t offset = e.at("offset").get<int64_t>();
      int64_t count = e.at("count").get<int64_t>();
      if (e.at("dtype").get<std::string>() != "float32")
        throw IntegrityError("checkpoint entry '" + name + "': unsupported dtype");
      int64_t numel = std::accumulate(shape.begin(), shape.end(), int64_t{1},
                                      std::multiplies<int64_t>());
      if (numel != count)
        throw IntegrityError("checkpoint entry '" + name +
                             "': shape/count disagreement");
      if (offset != total)
        throw IntegrityError("checkpoint entry '" + name + "': offset gap");
      std::vector<float> values =
          read_f32(payload, static_cast<size_t>(offset) * sizeof(float),
                   static_cast<size_t>(count));
      out.model.params.add(name, shape);
      out.model.params.entry_mut(name).values = std::move(values);
      total += count;
    }
    if (static_cast<size_t>(total) * sizeof(float) != payload.size())
      throw IntegrityError("checkpoint payload has trailing bytes");
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("checkpoint header: missing field: ") +
                         e.what());
  }
  return out;
}

void require_same_vocab(const Vocabulary& a, const Vocabulary& b) {
  if (a.id_to_word != b.id_to_word)
    throw VocabError("vocabulary word lists differ");
  if (a.prompt_template != b.prompt_template)
    throw VocabError("prompt templates differ");
  if (a.max_tokens != b.max_tokens)
    throw VocabError("token caps differ");
}

}  // namespace vtc
