#pragma once

#include <string>

#include "vtc/config.hpp"
#include "vtc/params.hpp"
#include "vtc/tokenizer.hpp"

namespace vtc {

// Adds per-layer prompt banks ("prompt.vision.<l>", "prompt.text.<l>" for
// l in [0, depth)) with normal(0, init_std) init.  Base entries untouched.
void attach_prompts(ParameterStore& params, const PromptConfig& cfg,
                    const ModelConfig& model, uint64_t seed);

// Prompt-slot update for the input of layer `layer_index`:
//   layer 0            -> bank rows prepended before the content tokens
//   0 < layer < depth  -> the first bank-row-count rows are replaced
//   layer >= depth     -> identity (slots propagate)
// tokens: [B, S, D]; bank: [n, D].
Tensor inject(int layer_index, const Tensor& tokens, const Tensor& bank, int depth);

// Mask marking exactly the "prompt."-prefixed names trainable.
FreezeMask freeze_base(const ParameterStore& params);

bool is_prompt_name(const std::string& name);

// The prompted text window check: every class prompt must still fit when
// n_text_tokens positions of the notional token window are given to prompts.
void validate_prompted_vocab(const Vocabulary& vocab,
                             const std::vector<std::string>& class_names,
                             const PromptConfig& cfg);

}  // namespace vtc
