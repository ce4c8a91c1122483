#include "vtc/encoders.hpp"

#include <cmath>

#include "vtc/rng.hpp"

namespace vtc {

Tensor patchify(const double* frame, int h, int w, int c, int p) {
  if (h % p != 0 || w % p != 0)
    throw ShapeError("patchify: patch size " + std::to_string(p) +
                     " does not divide " + std::to_string(h) + "x" + std::to_string(w));
  int gh = h / p, gw = w / p;
  int n = gh * gw, pdim = p * p * c;
  Tensor out({n, pdim});
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      double* dst = out.row_ptr(gy * gw + gx);
      for (int py = 0; py < p; ++py) {
        const double* src = frame + ((static_cast<size_t>(gy) * p + py) * w +
                                     static_cast<size_t>(gx) * p) * c;
        std::copy(src, src + static_cast<size_t>(p) * c,
                  dst + static_cast<size_t>(py) * p * c);
      }
    }
  }
  return out;
}

Tensor patchify_rows(const Tensor& frames, int h, int w, int c, int p) {
  if (frames.ndim() != 2 || frames.dim(1) != h * w * c)
    throw ShapeError("patchify_rows: frames " + shape_str(frames.shape) +
                     " vs pixels " + std::to_string(h * w * c));
  int r = frames.dim(0);
  int gh = h / p, gw = w / p;
  int n = gh * gw, pdim = p * p * c;
  Tensor out({r, n, pdim});
  for (int i = 0; i < r; ++i) {
    Tensor one = patchify(frames.row_ptr(i), h, w, c, p);
    std::copy(one.data.begin(), one.data.end(), out.mat_ptr(i));
  }
  return out;
}

namespace {

struct NamedShape {
  std::string name;
  std::vector<int> shape;
};

void tower_param_names(const std::string& tower, int layers, int d, int mlp_ratio,
                       std::vector<NamedShape>& out) {
  int hidden = d * mlp_ratio;
  for (int l = 0; l < layers; ++l) {
    std::string p = tower + ".layers." + std::to_string(l) + ".";
    out.push_back({p + "ln1.gain", {d}});
    out.push_back({p + "ln1.bias", {d}});
    out.push_back({p + "attn.q.weight", {d, d}});
    out.push_back({p + "attn.q.bias", {d}});
    out.push_back({p + "attn.k.weight", {d, d}});
    out.push_back({p + "attn.k.bias", {d}});
    out.push_back({p + "attn.v.weight", {d, d}});
    out.push_back({p + "attn.v.bias", {d}});
    out.push_back({p + "attn.out.weight", {d, d}});
    out.push_back({p + "attn.out.bias", {d}});
    out.push_back({p + "ln2.gain", {d}});
    out.push_back({p + "ln2.bias", {d}});
    out.push_back({p + "mlp.fc1.weight", {d, hidden}});
    out.push_back({p + "mlp.fc1.bias", {hidden}});
    out.push_back({p + "mlp.fc2.weight", {hidden, d}});
    out.push_back({p + "mlp.fc2.bias", {d}});
  }
}

std::vector<NamedShape> all_param_shapes(const ModelConfig& cfg) {
  int d = cfg.embed_dim;
  std::vector<NamedShape> out;
  out.push_back({"vision.patch_embed.weight", {cfg.patch_dim(), d}});
  out.push_back({"vision.patch_embed.bias", {d}});
  out.push_back({"vision.cls_token", {1, d}});
  out.push_back({"vision.pos_embed", {1 + cfg.patches_per_frame(), d}});
  tower_param_names("vision", cfg.vision.layers, d, cfg.vision.mlp_ratio, out);
  out.push_back({"vision.ln_post.gain", {d}});
  out.push_back({"vision.ln_post.bias", {d}});
  out.push_back({"vision.proj", {d, d}});
  out.push_back({"text.token_embed", {cfg.text.vocab_size, d}});
  out.push_back({"text.pos_embed", {cfg.text.max_tokens, d}});
  tower_param_names("text", cfg.text.layers, d, cfg.text.mlp_ratio, out);
  out.push_back({"text.ln_final.gain", {d}});
  out.push_back({"text.ln_final.bias", {d}});
  out.push_back({"text.proj", {d, d}});
  out.push_back({"logit_scale", {1}});
  return out;
}

bool is_gain(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".gain") == 0;
}
bool is_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}

}  // namespace

ParameterStore init_dual_encoder(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.text.vocab_size <= 0)
    throw ConfigError("model.text.vocab_size: must be set before initialization");
  ParameterStore store;
  for (const NamedShape& ns : all_param_shapes(cfg)) {
    store.add(ns.name, ns.shape);
    auto& vals = store.entry_mut(ns.name).values;
    if (ns.name == "logit_scale") {
      vals[0] = static_cast<float>(std::log(1.0 / 0.07));
    } else if (is_gain(ns.name)) {
      std::fill(vals.begin(), vals.end(), 1.0f);
    } else if (is_bias(ns.name)) {
      // already zero
    } else {
      Rng rng(cfg.seed, ns.name);
      for (float& v : vals) v = static_cast<float>(rng.truncated_normal(0.02));
    }
  }
  return store;
}

ModelForward::ModelForward(Graph& g, const ParameterStore& params,
                           const ModelConfig& cfg, const PromptConfig* prompts)
    : g_(&g), params_(&params), cfg_(cfg), prompts_(prompts) {
  if (prompts_ != nullptr && !prompts_->empty()) prompts_->validate(cfg_);
}

int ModelForward::param(const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  int id = g_->leaf(params_->as_tensor(name));
  leaves_.emplace(name, id);
  return id;
}

int ModelForward::transformer_blocks(int x, const std::string& tower, int layers,
                                     int heads, int n_prompt, bool causal) {
  for (int l = 0; l < layers; ++l) {
    if (n_prompt > 0 && l >= 1 && l < prompts_->depth)
      x = g_->replace_front_rows(x, param("prompt." + tower + "." + std::to_string(l)));
    std::string p = tower + ".layers." + std::to_string(l) + ".";
    int h = g_->layer_norm(x, param(p + "ln1.gain"), param(p + "ln1.bias"));
    int a = g_->attention(h, heads, param(p + "attn.q.weight"), param(p + "attn.q.bias"),
                          param(p + "attn.k.weight"), param(p + "attn.k.bias"),
                          param(p + "attn.v.weight"), param(p + "attn.v.bias"),
                          param(p + "attn.out.weight"), param(p + "attn.out.bias"),
                          causal);
    x = g_->add(x, a);
    int h2 = g_->layer_norm(x, param(p + "ln2.gain"), param(p + "ln2.bias"));
    int m = g_->linear(h2, param(p + "mlp.fc1.weight"), param(p + "mlp.fc1.bias"));
    m = g_->gelu(m);
    m = g_->linear(m, param(p + "mlp.fc2.weight"), param(p + "mlp.fc2.bias"));
    x = g_->add(x, m);
  }
  return x;
}

int ModelForward::encode_frames(const Tensor& frames) {
  const VisionConfig& vc = cfg_.vision;
  Tensor patches = patchify_rows(frames, vc.image_size, vc.image_size, vc.channels,
                                 vc.patch_size);
  int x = g_->leaf(std::move(patches));
  x = g_->linear(x, param("vision.patch_embed.weight"), param("vision.patch_embed.bias"));
  x = g_->prepend_rows(x, param("vision.cls_token"));
  x = g_->add_rowmat(x, param("vision.pos_embed"));
  int n_prompt = prompted() ? prompts_->n_vision_tokens : 0;
  if (n_prompt > 0) x = g_->prepend_rows(x, param("prompt.vision.0"));
  x = transformer_blocks(x, "vision", vc.layers, vc.heads, n_prompt, false);
  int cls = g_->select_row(x, n_prompt);  // CLS sits after the prompt block
  cls = g_->layer_norm(cls, param("vision.ln_post.gain"), param("vision.ln_post.bias"));
  return g_->linear(cls, param("vision.proj"), -1);
}

int ModelForward::encode_text(const std::vector<TokenSequence>& seqs) {
  const TextConfig& tc = cfg_.text;
  if (seqs.empty()) throw ShapeError("encode_text: empty batch");
  int bsz = static_cast<int>(seqs.size());
  int s = tc.max_tokens;
  std::vector<int> flat;
  flat.reserve(static_cast<size_t>(bsz) * s);
  std::vector<int> eos_rows(static_cast<size_t>(bsz));
  int n_prompt = prompted() ? prompts_->n_text_tokens : 0;
  for (int b = 0; b < bsz; ++b) {
    const TokenSequence& seq = seqs[static_cast<size_t>(b)];
    if (static_cast<int>(seq.ids.size()) != s)
      throw ShapeError("encode_text: sequence length " +
                       std::to_string(seq.ids.size()) + " != max_tokens " +
                       std::to_string(s));
    if (seq.eos_index <= 0 || seq.eos_index >= s)
      throw ShapeError("encode_text: eos_index out of range");
    flat.insert(flat.end(), seq.ids.begin(), seq.ids.end());
    eos_rows[static_cast<size_t>(b)] = n_prompt + seq.eos_index;
  }
  int x = g_->gather_rows(param("text.token_embed"), flat);
  x = g_->reshape(x, {bsz, s, cfg_.embed_dim});
  x = g_->add_rowmat(x, param("text.pos_embed"));
  if (n_prompt > 0) x = g_->prepend_rows(x, param("prompt.text.0"));
  x = transformer_blocks(x, "text", tc.layers, tc.heads, n_prompt, true);
  int eos = g_->select_rows(x, eos_rows);
  eos = g_->layer_norm(eos, param("text.ln_final.gain"), param("text.ln_final.bias"));
  return g_->linear(eos, param("text.proj"), -1);
}

Tensor encode_frames_values(const ParameterStore& params, const ModelConfig& cfg,
                            const Tensor& frames, const PromptConfig* prompts) {
  Graph g;
  ModelForward fwd(g, params, cfg, prompts);
  return g.val(fwd.encode_frames(frames));
}

Tensor encode_text_values(const ParameterStore& params, const ModelConfig& cfg,
                          const std::vector<TokenSequence>& seqs,
                          const PromptConfig* prompts) {
  Graph g;
  ModelForward fwd(g, params, cfg, prompts);
  return g.val(fwd.encode_text(seqs));
}

}  // namespace vtc
