#include "vtc/prompting.hpp"

#include "vtc/rng.hpp"

namespace vtc {

bool is_prompt_name(const std::string& name) {
  return name.rfind("prompt.", 0) == 0;
}

void attach_prompts(ParameterStore& params, const PromptConfig& cfg,
                    const ModelConfig& model, uint64_t seed) {
  cfg.validate(model);
  for (const std::string& n : params.names())
    if (is_prompt_name(n))
      throw DuplicateParameter("prompts already attached ('" + n + "' exists)");
  int d = model.embed_dim;
  for (int l = 0; l < cfg.depth; ++l) {
    if (cfg.n_vision_tokens > 0)
      params.add("prompt.vision." + std::to_string(l), {cfg.n_vision_tokens, d});
    if (cfg.n_text_tokens > 0)
      params.add("prompt.text." + std::to_string(l), {cfg.n_text_tokens, d});
  }
  for (const std::string& n : params.names()) {
    if (!is_prompt_name(n)) continue;
    Rng rng(seed, n);
    for (float& v : params.entry_mut(n).values)
      v = static_cast<float>(rng.normal() * cfg.init_std);
  }
}

Tensor inject(int layer_index, const Tensor& tokens, const Tensor& bank, int depth) {
  if (tokens.ndim() != 3 || bank.ndim() != 2 || bank.dim(1) != tokens.dim(2))
    throw ShapeError("inject: tokens " + shape_str(tokens.shape) + " with bank " +
                     shape_str(bank.shape));
  if (layer_index >= depth) return tokens;
  int bsz = tokens.dim(0), s = tokens.dim(1), d = tokens.dim(2), n = bank.dim(0);
  if (layer_index == 0) {
    Tensor out({bsz, n + s, d});
    for (int b = 0; b < bsz; ++b) {
      double* dst = out.mat_ptr(b);
      std::copy(bank.data.begin(), bank.data.end(), dst);
      const double* src = tokens.mat_ptr(b);
      std::copy(src, src + static_cast<size_t>(s) * d, dst + static_cast<size_t>(n) * d);
    }
    return out;
  }
  if (n > s) throw ShapeError("inject: bank larger than sequence");
  Tensor out = tokens;
  for (int b = 0; b < bsz; ++b)
    std::copy(bank.data.begin(), bank.data.end(), out.mat_ptr(b));
  return out;
}

FreezeMask freeze_base(const ParameterStore& params) {
  bool any = false;
  for (const std::string& n : params.names())
    if (is_prompt_name(n)) {
      any = true;
      break;
    }
  if (!any) throw ConfigError("freeze_base: no prompt banks attached");
  FreezeMask mask;
  mask.trainable = [](const std::string& name) { return is_prompt_name(name); };
  return mask;
}

void validate_prompted_vocab(const Vocabulary& vocab,
                             const std::vector<std::string>& class_names,
                             const PromptConfig& cfg) {
  for (const std::string& c : class_names) {
    std::string p = render_prompt(to_lower(c), to_lower(vocab.prompt_template));
    int words = static_cast<int>(split_words(p).size());
    if (cfg.n_text_tokens + words > vocab.max_tokens)
      throw ConfigError("prompts.n_text_tokens: " + std::to_string(cfg.n_text_tokens) +
                        " prompt tokens plus " + std::to_string(words) +
                        "-word class prompt '" + p + "' exceed the " +
                        std::to_string(vocab.max_tokens) + "-token window");
  }
}

}  // namespace vtc
