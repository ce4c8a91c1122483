#include "vtc/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vtc/rng.hpp"
#include <json.hpp>

namespace vtc {

using nlohmann::json;

double Model::temperature() const {
  double s = static_cast<double>(params.entry("logit_scale").values[0]);
  s = std::min(s, std::log(100.0));  // tau floor 0.01
  return std::exp(-s);
}

void SplitSpec::validate() const {
  auto disjoint = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::set<int> sa(a.begin(), a.end());
    for (int x : b)
      if (sa.count(x)) return false;
    return true;
  };
  if (setting == "zero_shot") {
    if (source_classes.empty() || target_classes.empty())
      throw ConfigError("zero_shot split: source and target must be non-empty");
    if (!disjoint(source_classes, target_classes))
      throw ConfigError("zero_shot split: source and target classes overlap");
  } else if (setting == "base_to_novel") {
    if (base_classes.empty() || novel_classes.empty())
      throw ConfigError("base_to_novel split: both halves must be non-empty");
    if (!disjoint(base_classes, novel_classes))
      throw ConfigError("base_to_novel split: base and novel overlap");
    std::set<int> all(source_classes.begin(), source_classes.end());
    std::set<int> uni(base_classes.begin(), base_classes.end());
    uni.insert(novel_classes.begin(), novel_classes.end());
    if (all != uni)
      throw ConfigError("base_to_novel split: base ∪ novel != source classes");
  } else if (setting == "few_shot") {
    for (const auto& [cid, idx] : train_samples)
      if (static_cast<int>(idx.size()) != k)
        throw ConfigError("few_shot split: class " + std::to_string(cid) +
                          " has " + std::to_string(idx.size()) + " != K samples");
  } else if (setting != "fully_supervised") {
    throw ConfigError("unknown protocol setting '" + setting + "'");
  }
}

std::pair<std::vector<int>, std::vector<int>> make_base_novel_split(
    const std::map<int, int>& class_frequencies) {
  if (class_frequencies.size() < 2)
    throw ConfigError("base/novel split needs at least 2 classes");
  std::vector<std::pair<int, int>> order;  // (class_id, count)
  for (const auto& kv : class_frequencies) order.push_back(kv);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  size_t n_base = (order.size() + 1) / 2;  // ceil: odd counts favor base
  std::vector<int> base, novel;
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_base ? base : novel).push_back(order[i].first);
  return {base, novel};
}

namespace {

std::vector<int> draw_subset(Rng& rng, int count, int k) {
  std::vector<int> pool(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) pool[static_cast<size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(count - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::map<int, std::vector<int>> sample_k_shot(const DatasetManifest& manifest, int k,
                                              uint64_t seed, int split_index) {
  if (split_index < 1) throw ConfigError("split_index must be >= 1");
  int count = manifest.gen.train_per_class;
  if (k > count)
    throw DataError("K=" + std::to_string(k) + " shots exceed " +
                    std::to_string(count) + " train samples per class");
  std::map<int, std::vector<int>> out;
  for (const ClassSpec& spec : manifest.classes) {
    std::vector<std::vector<int>> prior;
    std::vector<int> subset;
    for (int s = 1; s <= split_index; ++s) {
      Rng rng(mix64(seed, static_cast<uint64_t>(spec.class_id)),
              "kshot_s" + std::to_string(s));
      subset = draw_subset(rng, count, k);
      // keep the three splits pairwise distinct when distinct subsets exist
      for (int attempt = 0; attempt < 64; ++attempt) {
        bool clash = false;
        for (const auto& p : prior)
          if (p == subset) clash = true;
        if (!clash || k >= count) break;
        subset = draw_subset(rng, count, k);
      }
      prior.push_back(subset);
    }
    out[spec.class_id] = subset;
  }
  return out;
}

double top_k_accuracy(const Tensor& logits, const std::vector<int>& labels, int k) {
  if (logits.ndim() != 2 || static_cast<int>(labels.size()) != logits.dim(0))
    throw ShapeError("top_k_accuracy: logits " + shape_str(logits.shape) + " vs " +
                     std::to_string(labels.size()) + " labels");
  int classes = logits.dim(1);
  if (k < 1 || k > classes)
    throw DataError("top_k_accuracy: k=" + std::to_string(k) + " out of range");
  int hits = 0;
  for (int i = 0; i < logits.dim(0); ++i) {
    int label = labels[static_cast<size_t>(i)];
    if (label < 0 || label >= classes)
      throw DataError("top_k_accuracy: label " + std::to_string(label) +
                      " out of range");
    const double* row = logits.row_ptr(i);
    double lt = row[label];
    int rank = 0;
    for (int j = 0; j < classes; ++j) {
      if (row[j] > lt || (row[j] == lt && j < label)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return 100.0 * hits / logits.dim(0);
}

double harmonic_mean(double base_acc, double novel_acc) {
  if (base_acc < 0 || novel_acc < 0)
    throw DataError("harmonic_mean: accuracies must be non-negative");
  if (base_acc + novel_acc == 0.0) return 0.0;
  return 2.0 * base_acc * novel_acc / (base_acc + novel_acc);
}

ClusterQuality cluster_quality(const std::vector<int>& pred_labels,
                               const std::vector<int>& true_labels) {
  if (pred_labels.size() != true_labels.size() || pred_labels.empty())
    throw DataError("cluster_quality: label arrays must be equal-length, non-empty");
  size_t n = pred_labels.size();
  std::map<int, int> pred_count, true_count;
  std::map<std::pair<int, int>, int> joint;
  for (size_t i = 0; i < n; ++i) {
    pred_count[pred_labels[i]]++;
    true_count[true_labels[i]]++;
    joint[{pred_labels[i], true_labels[i]}]++;
  }
  auto entropy = [n](const std::map<int, int>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) {
      double p = static_cast<double>(c) / static_cast<double>(n);
      h -= p * std::log(p);
    }
    return h;
  };
  double h_true = entropy(true_count);
  double h_pred = entropy(pred_count);
  // conditional entropies from the joint table
  double h_true_given_pred = 0.0, h_pred_given_true = 0.0;
  for (const auto& [key, c] : joint) {
    double p_joint = static_cast<double>(c) / static_cast<double>(n);
    double p_pred = static_cast<double>(pred_count[key.first]) / static_cast<double>(n);
    double p_true = static_cast<double>(true_count[key.second]) / static_cast<double>(n);
    h_true_given_pred -= p_joint * std::log(p_joint / p_pred);
    h_pred_given_true -= p_joint * std::log(p_joint / p_true);
  }
  ClusterQuality q;
  q.homogeneity = h_true == 0.0 ? 1.0 : 1.0 - h_true_given_pred / h_true;
  q.completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_true / h_pred;
  double s = q.homogeneity + q.completeness;
  q.v_measure = s == 0.0 ? 0.0 : 2.0 * q.homogeneity * q.completeness / s;
  return q;
}

namespace {
std::vector<int> all_class_ids(const DatasetManifest& m) {
  std::vector<int> out;
  for (const ClassSpec& c : m.classes) out.push_back(c.class_id);
  return out;
}
}  // namespace

SplitSpec make_zero_shot_split(const DatasetManifest& manifest,
                               const std::vector<std::string>& target_names) {
  SplitSpec spec;
  spec.setting = "zero_shot";
  std::set<int> target_ids;
  for (const std::string& name : target_names) {
    bool found = false;
    for (const ClassSpec& c : manifest.classes) {
      if (c.name == name) {
        target_ids.insert(c.class_id);
        found = true;
        break;
      }
    }
    if (!found)
      throw ConfigError("protocol.target_classes: class '" + name +
                        "' not in the dataset roster");
  }
  for (const ClassSpec& c : manifest.classes) {
    if (target_ids.count(c.class_id))
      spec.target_classes.push_back(c.class_id);
    else
      spec.source_classes.push_back(c.class_id);
  }
  spec.validate();
  return spec;
}

SplitSpec make_base_to_novel_spec(const DatasetManifest& manifest, int k, uint64_t seed,
                                  int split_index) {
  SplitSpec spec;
  spec.setting = "base_to_novel";
  spec.source_classes = all_class_ids(manifest);
  std::map<int, int> freq;
  for (int cid : spec.source_classes) freq[cid] = manifest.gen.train_per_class;
  auto [base, novel] = make_base_novel_split(freq);
  spec.base_classes = std::move(base);
  spec.novel_classes = std::move(novel);
  spec.k = k;
  spec.seed = seed;
  spec.split_index = split_index;
  auto shots = sample_k_shot(manifest, k, seed, split_index);
  for (int cid : spec.base_classes) spec.train_samples[cid] = shots.at(cid);
  spec.validate();
  return spec;
}

SplitSpec make_few_shot_spec(const DatasetManifest& manifest, int k, uint64_t seed,
                             int split_index) {
  SplitSpec spec;
  spec.setting = "few_shot";
  spec.source_classes = all_class_ids(manifest);
  spec.k = k;
  spec.seed = seed;
  spec.split_index = split_index;
  spec.train_samples = sample_k_shot(manifest, k, seed, split_index);
  spec.validate();
  return spec;
}

SplitSpec make_supervised_spec(const DatasetManifest& manifest) {
  SplitSpec spec;
  spec.setting = "fully_supervised";
  spec.source_classes = all_class_ids(manifest);
  std::vector<int> all(static_cast<size_t>(manifest.gen.train_per_class));
  for (int i = 0; i < manifest.gen.train_per_class; ++i) all[static_cast<size_t>(i)] = i;
  for (int cid : spec.source_classes) spec.train_samples[cid] = all;
  spec.validate();
  return spec;
}

void require_vocab_coverage(const Vocabulary& vocab,
                            const std::vector<ClassSpec>& classes) {
  for (const ClassSpec& c : classes) {
    std::string prompt = render_prompt(to_lower(c.name), to_lower(vocab.prompt_template));
    for (const std::string& w : split_words(prompt))
      if (!vocab.word_to_id.count(w))
        throw VocabError("class '" + c.name + "': word '" + w +
                         "' missing from the checkpoint vocabulary");
  }
}

Tensor class_text_embeddings(const Model& model, const std::vector<ClassSpec>& classes) {
  require_vocab_coverage(model.vocab, classes);
  std::vector<TokenSequence> seqs;
  seqs.reserve(classes.size());
  for (const ClassSpec& c : classes)
    seqs.push_back(tokenize(render_prompt(to_lower(c.name),
                                          to_lower(model.vocab.prompt_template)),
                            model.vocab));
  return encode_text_values(model.params, model.config, seqs, model.prompt_ptr());
}

EvalOutcome evaluate_videos(const Model& model,
                            const std::vector<const VideoSample*>& videos,
                            const std::vector<int>& labels,
                            const std::vector<ClassSpec>& classes,
                            const EvalOptions& opt) {
  if (videos.empty()) throw DataError("evaluate_videos: no videos");
  if (videos.size() != labels.size())
    throw DataError("evaluate_videos: label count mismatch");
  if (opt.crop_size != model.config.vision.image_size)
    throw ShapeError("evaluate_videos: crop " + std::to_string(opt.crop_size) +
                     " != model input " +
                     std::to_string(model.config.vision.image_size));
  int kcls = static_cast<int>(classes.size());
  Tensor text_emb = class_text_embeddings(model, classes);
  std::vector<TextEmbedding> texts(static_cast<size_t>(kcls));
  for (int j = 0; j < kcls; ++j) {
    texts[static_cast<size_t>(j)].class_id = classes[static_cast<size_t>(j)].class_id;
    texts[static_cast<size_t>(j)].value.assign(text_emb.row_ptr(j),
                                               text_emb.row_ptr(j) + text_emb.dim(1));
  }
  double tau = model.temperature();
  ViewSet vs{opt.spatial_crops, opt.temporal_clips, opt.crop_size, opt.frames};
  int n = static_cast<int>(videos.size());
  int d = model.config.embed_dim;

  EvalOutcome out;
  out.embeddings = Tensor({n, d});
  out.true_labels = labels;
  out.pred_labels.resize(static_cast<size_t>(n));
  out.video_ids.reserve(static_cast<size_t>(n));
  for (const ClassSpec& c : classes) out.class_ids.push_back(c.class_id);
  Tensor all_logits({n, kcls});

  for (int i = 0; i < n; ++i) {
    const VideoSample& v = *videos[static_cast<size_t>(i)];
    out.video_ids.push_back(v.video_id);
    std::vector<Tensor> views = make_views(v, vs, 0);
    int t = opt.frames;
    int px = opt.crop_size * opt.crop_size * v.c;
    // encode all views of this video as one frame batch
    Tensor rows({static_cast<int>(views.size()) * t, px});
    for (size_t w = 0; w < views.size(); ++w)
      std::copy(views[w].data.begin(), views[w].data.end(),
                rows.row_ptr(static_cast<int>(w) * t));
    Tensor frame_emb = encode_frames_values(model.params, model.config, rows,
                                            model.prompt_ptr());
    std::vector<Tensor> view_logits;
    std::vector<double> mean_emb(static_cast<size_t>(d), 0.0);
    for (size_t w = 0; w < views.size(); ++w) {
      FrameEmbeddings fe;
      fe.source_video_id = v.video_id;
      fe.values = Tensor({t, d});
      std::copy(frame_emb.row_ptr(static_cast<int>(w) * t),
                frame_emb.row_ptr(static_cast<int>(w) * t) + static_cast<size_t>(t) * d,
                fe.values.row_ptr(0));
      VideoEmbedding pooled = temporal_pool(fe);
      for (int j = 0; j < d; ++j) mean_emb[static_cast<size_t>(j)] += pooled.value[j];
      FusionResult fused = fuse_and_score({fe}, texts, tau, opt.fusion);
      view_logits.push_back(inference_logits(fused, 1).values);
    }
    Tensor final_logits = multi_view_logits(view_logits);
    std::copy(final_logits.row_ptr(0), final_logits.row_ptr(0) + kcls,
              all_logits.row_ptr(i));
    // the clustering embedding is the view-mean pooled embedding, rounded to
    // the dump's float32 so offline recomputation matches exactly
    for (int j = 0; j < d; ++j)
      out.embeddings.at(i, j) = static_cast<double>(
          static_cast<float>(mean_emb[static_cast<size_t>(j)] / views.size()));
  }

  // nearest-text cluster assignment from the rounded embeddings
  for (int i = 0; i < n; ++i) {
    std::vector<double> e(out.embeddings.row_ptr(i), out.embeddings.row_ptr(i) + d);
    int best = 0;
    double best_sim = -2.0;
    for (int j = 0; j < kcls; ++j) {
      double s = cosine_sim(e, texts[static_cast<size_t>(j)].value);
      if (s > best_sim) {
        best_sim = s;
        best = j;
      }
    }
    out.pred_labels[static_cast<size_t>(i)] = best;
  }

  out.metrics.sample_count = n;
  out.metrics.top1 = top_k_accuracy(all_logits, labels, 1);
  out.metrics.top5 = top_k_accuracy(all_logits, labels, std::min(5, kcls));
  ClusterQuality q = cluster_quality(out.pred_labels, out.true_labels);
  out.metrics.homogeneity = q.homogeneity;
  out.metrics.completeness = q.completeness;
  out.metrics.v_measure = q.v_measure;
  return out;
}

namespace {

std::vector<ClassSpec> classes_by_ids(const DatasetManifest& m,
                                      const std::vector<int>& ids) {
  std::vector<ClassSpec> out;
  for (int id : ids) {
    bool found = false;
    for (const ClassSpec& c : m.classes)
      if (c.class_id == id) {
        out.push_back(c);
        found = true;
        break;
      }
    if (!found) throw DataError("class id " + std::to_string(id) + " not in manifest");
  }
  return out;
}

void collect_val(const Dataset& ds, const std::vector<int>& class_ids,
                 std::vector<const VideoSample*>& videos, std::vector<int>& labels) {
  for (size_t pos = 0; pos < class_ids.size(); ++pos) {
    int cid = class_ids[pos];
    int slot = ds.class_slot(cid);
    for (int i = 0; i < ds.manifest.gen.val_per_class; ++i) {
      videos.push_back(
          &ds.val[static_cast<size_t>(slot) * ds.manifest.gen.val_per_class + i]);
      labels.push_back(static_cast<int>(pos));
    }
  }
}

}  // namespace

SplitMetrics run_protocol_split(const SplitSpec& spec, const Model& model,
                                const Dataset& ds, const EvalOptions& opt,
                                EvalOutcome* outcome) {
  spec.validate();
  if (spec.setting == "base_to_novel") {
    std::vector<const VideoSample*> base_videos, novel_videos;
    std::vector<int> base_labels, novel_labels;
    collect_val(ds, spec.base_classes, base_videos, base_labels);
    collect_val(ds, spec.novel_classes, novel_videos, novel_labels);
    auto base_classes = classes_by_ids(ds.manifest, spec.base_classes);
    auto novel_classes = classes_by_ids(ds.manifest, spec.novel_classes);
    EvalOutcome base_out =
        evaluate_videos(model, base_videos, base_labels, base_classes, opt);
    EvalOutcome novel_out =
        evaluate_videos(model, novel_videos, novel_labels, novel_classes, opt);

    SplitMetrics m;
    m.base_acc = base_out.metrics.top1;
    m.novel_acc = novel_out.metrics.top1;
    m.hm = harmonic_mean(m.base_acc, m.novel_acc);
    int nb = base_out.metrics.sample_count, nn = novel_out.metrics.sample_count;
    m.sample_count = nb + nn;
    m.top1 = (base_out.metrics.top1 * nb + novel_out.metrics.top1 * nn) / (nb + nn);
    m.top5 = (base_out.metrics.top5 * nb + novel_out.metrics.top5 * nn) / (nb + nn);

    // clustering over the union, assigned against the union text set
    std::vector<int> union_ids = spec.base_classes;
    union_ids.insert(union_ids.end(), spec.novel_classes.begin(),
                     spec.novel_classes.end());
    auto union_classes = classes_by_ids(ds.manifest, union_ids);
    Tensor union_text = class_text_embeddings(model, union_classes);
    int d = model.config.embed_dim;
    int total = nb + nn;
    Tensor emb({total, d});
    std::vector<int> true_union(static_cast<size_t>(total));
    std::vector<std::string> vids;
    for (int i = 0; i < nb; ++i) {
      std::copy(base_out.embeddings.row_ptr(i), base_out.embeddings.row_ptr(i) + d,
                emb.row_ptr(i));
      true_union[static_cast<size_t>(i)] = base_out.true_labels[static_cast<size_t>(i)];
      vids.push_back(base_out.video_ids[static_cast<size_t>(i)]);
    }
    int base_k = static_cast<int>(spec.base_classes.size());
    for (int i = 0; i < nn; ++i) {
      std::copy(novel_out.embeddings.row_ptr(i), novel_out.embeddings.row_ptr(i) + d,
                emb.row_ptr(nb + i));
      true_union[static_cast<size_t>(nb + i)] =
          base_k + novel_out.true_labels[static_cast<size_t>(i)];
      vids.push_back(novel_out.video_ids[static_cast<size_t>(i)]);
    }
    std::vector<int> pred_union(static_cast<size_t>(total));
    for (int i = 0; i < total; ++i) {
      std::vector<double> e(emb.row_ptr(i), emb.row_ptr(i) + d);
      int best = 0;
      double best_sim = -2.0;
      for (int j = 0; j < static_cast<int>(union_classes.size()); ++j) {
        std::vector<double> tvec(union_text.row_ptr(j), union_text.row_ptr(j) + d);
        double s = cosine_sim(e, tvec);
        if (s > best_sim) {
          best_sim = s;
          best = j;
        }
      }
      pred_union[static_cast<size_t>(i)] = best;
    }
    ClusterQuality q = cluster_quality(pred_union, true_union);
    m.homogeneity = q.homogeneity;
    m.completeness = q.completeness;
    m.v_measure = q.v_measure;
    if (outcome) {
      outcome->metrics = m;
      outcome->embeddings = std::move(emb);
      outcome->true_labels = std::move(true_union);
      outcome->pred_labels = std::move(pred_union);
      std::vector<int> ids;
      for (const ClassSpec& c : union_classes) ids.push_back(c.class_id);
      outcome->class_ids = std::move(ids);
      outcome->video_ids = std::move(vids);
    }
    return m;
  }

  const std::vector<int>& eval_ids =
      spec.setting == "zero_shot" ? spec.target_classes : spec.source_classes;
  std::vector<const VideoSample*> videos;
  std::vector<int> labels;
  collect_val(ds, eval_ids, videos, labels);
  auto classes = classes_by_ids(ds.manifest, eval_ids);
  EvalOutcome got = evaluate_videos(model, videos, labels, classes, opt);
  if (outcome) *outcome = got;
  return got.metrics;
}

EvalReport aggregate_splits(const std::string& setting,
                            const std::vector<SplitMetrics>& splits) {
  if (splits.empty()) throw DataError("aggregate_splits: no split metrics");
  EvalReport r;
  r.setting = setting;
  r.splits = splits;
  auto fields = [](SplitMetrics& m) {
    return std::array<double*, 8>{&m.top1, &m.top5,        &m.base_acc,
                                  &m.novel_acc, &m.hm,     &m.homogeneity,
                                  &m.completeness, &m.v_measure};
  };
  SplitMetrics mean{}, stddev{};
  auto mean_f = fields(mean);
  for (const SplitMetrics& s : splits) {
    SplitMetrics tmp = s;
    auto sf = fields(tmp);
    for (size_t i = 0; i < sf.size(); ++i) *mean_f[i] += *sf[i];
    mean.sample_count += s.sample_count;
  }
  for (double* p : mean_f) *p /= static_cast<double>(splits.size());
  if (splits.size() > 1) {
    auto std_f = fields(stddev);
    for (const SplitMetrics& s : splits) {
      SplitMetrics tmp = s;
      auto sf = fields(tmp);
      for (size_t i = 0; i < sf.size(); ++i) {
        double d = *sf[i] - *mean_f[i];
        *std_f[i] += d * d;
      }
    }
    for (double* p : std_f)
      *p = std::sqrt(*p / static_cast<double>(splits.size() - 1));
  }
  r.mean = mean;
  r.stddev = stddev;
  return r;
}

namespace {
json metrics_to_json(const SplitMetrics& m) {
  return {{"top1", m.top1},
          {"top5", m.top5},
          {"base_acc", m.base_acc},
          {"novel_acc", m.novel_acc},
          {"hm", m.hm},
          {"homogeneity", m.homogeneity},
          {"completeness", m.completeness},
          {"v_measure", m.v_measure},
          {"sample_count", m.sample_count}};
}

SplitMetrics metrics_from_json(const json& j) {
  SplitMetrics m;
  j.at("top1").get_to(m.top1);
  j.at("top5").get_to(m.top5);
  j.at("base_acc").get_to(m.base_acc);
  j.at("novel_acc").get_to(m.novel_acc);
  j.at("hm").get_to(m.hm);
  j.at("homogeneity").get_to(m.homogeneity);
  j.at("completeness").get_to(m.completeness);
  j.at("v_measure").get_to(m.v_measure);
  j.at("sample_count").get_to(m.sample_count);
  return m;
}
}  // namespace

std::string eval_report_to_json(const EvalReport& r) {
  json splits = json::array();
  for (const SplitMetrics& s : r.splits) splits.push_back(metrics_to_json(s));
  json j = {{"setting", r.setting},
            {"config_digest", r.config_digest},
            {"seed", r.seed},
            {"splits", splits},
            {"mean", metrics_to_json(r.mean)},
            {"stddev", metrics_to_json(r.stddev)}};
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: invalid JSON: ") + e.what());
  }
  EvalReport r;
  try {
    j.at("setting").get_to(r.setting);
    j.at("config_digest").get_to(r.config_digest);
    j.at("seed").get_to(r.seed);
    for (const json& s : j.at("splits")) r.splits.push_back(metrics_from_json(s));
    r.mean = metrics_from_json(j.at("mean"));
    r.stddev = metrics_from_json(j.at("stddev"));
  } catch (const json::exception& e) {
    throw DataError(std::string("eval report: missing field: ") + e.what());
  }
  return r;
}

std::string split_spec_to_json(const SplitSpec& spec) {
  json samples = json::object();
  for (const auto& [cid, idx] : spec.train_samples)
    samples[std::to_string(cid)] = idx;
  json j = {{"setting", spec.setting},
            {"source_classes", spec.source_classes},
            {"target_classes", spec.target_classes},
            {"base_classes", spec.base_classes},
            {"novel_classes", spec.novel_classes},
            {"k", spec.k},
            {"seed", spec.seed},
            {"split_index", spec.split_index},
            {"train_samples", samples}};
  return j.dump(2);
}

SplitSpec split_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("split file: invalid JSON: ") + e.what());
  }
  SplitSpec spec;
  try {
    j.at("setting").get_to(spec.setting);
    j.at("source_classes").get_to(spec.source_classes);
    j.at("target_classes").get_to(spec.target_classes);
    j.at("base_classes").get_to(spec.base_classes);
    j.at("novel_classes").get_to(spec.novel_classes);
    j.at("k").get_to(spec.k);
    j.at("seed").get_to(spec.seed);
    j.at("split_index").get_to(spec.split_index);
    for (const auto& [key, idx] : j.at("train_samples").items())
      spec.train_samples[std::stoi(key)] = idx.get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("split file: missing field: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace vtc
