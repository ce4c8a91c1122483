// Command-line front end: dataset generation, split creation, training,
// evaluation, embedding export, and report/plot emission.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtc/checkpoint.hpp"
#include "vtc/prompting.hpp"
#include "vtc/report.hpp"
#include "vtc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vtc;

namespace {

std::string out_root() {
  const char* env = std::getenv("VTC_OUT_ROOT");
  return env && *env ? env : "./out";
}

std::string resolve_out(const std::string& flag) {
  return flag.empty() ? out_root() : flag;
}

DatasetManifest read_manifest(const std::string& dataset_dir) {
  return manifest_from_json(read_text_file(dataset_dir + "/manifest.json"));
}

Vocabulary dataset_vocab(const DatasetManifest& manifest, int max_tokens) {
  return build_tokenizer(class_names(manifest.classes), kDefaultPromptTemplate,
                         max_tokens);
}

// Splits for the configured protocol setting: three for the multi-split
// settings, one otherwise.
std::vector<SplitSpec> config_splits(const DatasetManifest& manifest,
                                     const ProtocolConfig& p) {
  std::vector<SplitSpec> out;
  if (p.setting == "zero_shot") {
    out.push_back(make_zero_shot_split(manifest, p.target_classes));
  } else if (p.setting == "base_to_novel") {
    for (int s = 1; s <= 3; ++s)
      out.push_back(make_base_to_novel_spec(manifest, p.k, p.seed, s));
  } else if (p.setting == "few_shot") {
    for (int s = 1; s <= 3; ++s)
      out.push_back(make_few_shot_spec(manifest, p.k, p.seed, s));
  } else if (p.setting == "fully_supervised") {
    out.push_back(make_supervised_spec(manifest));
  } else {
    throw ConfigError("protocol.setting: unknown setting '" + p.setting + "'");
  }
  return out;
}

Model load_model(const std::string& checkpoint_path, const Vocabulary& expect_vocab,
                 std::vector<StageProvenance>* provenance = nullptr,
                 std::string* digest = nullptr) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  require_same_vocab(loaded.model.vocab, expect_vocab);
  if (provenance) *provenance = loaded.provenance;
  if (digest) *digest = loaded.payload_digest;
  return std::move(loaded.model);
}

EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions opt;
  opt.frames = cfg.protocol.frames;
  opt.spatial_crops = cfg.protocol.spatial_crops;
  opt.temporal_clips = cfg.protocol.temporal_clips;
  opt.crop_size = cfg.protocol.crop_size;
  opt.fusion = parse_fusion_mode(cfg.train.fusion);
  return opt;
}

std::string regime_label(const RunConfig& cfg, bool prompted) {
  return prompted ? cfg.train.regime + "+prompt" : cfg.train.regime;
}

struct CommonArgs {
  std::string config_path, dataset_dir, out_dir, checkpoint_path;
  std::vector<std::string> split_files;
};

int cmd_gen_data(const std::string& config_path, std::string out_dir, bool force) {
  RunConfig cfg = load_run_config(config_path);
  Dataset ds = generate_dataset(cfg.data);
  if (out_dir.empty())
    out_dir = out_root() + "/data_" + ds.manifest.dataset_id;
  write_dataset(out_dir, ds, force);
  std::cout << "dataset " << ds.manifest.dataset_id << " -> " << out_dir << "\n"
            << "classes " << ds.manifest.classes.size() << ", train "
            << ds.train.size() << ", val " << ds.val.size() << "\n";
  return 0;
}

int cmd_make_splits(const std::string& dataset_dir, const std::string& setting,
                    int k, uint64_t seed, std::string out_dir,
                    std::vector<std::string> targets) {
  DatasetManifest manifest = read_manifest(dataset_dir);
  ProtocolConfig p;
  p.setting = setting;
  p.k = k;
  p.seed = seed;
  if (!targets.empty()) p.target_classes = std::move(targets);
  p.validate();
  std::vector<SplitSpec> splits = config_splits(manifest, p);

  if (out_dir.empty()) out_dir = dataset_dir + "/splits";
  fs::create_directories(out_dir);
  for (const SplitSpec& s : splits) {
    std::string name = out_dir + "/split_" + setting + "_k" + std::to_string(s.k) +
                       "_seed" + std::to_string(seed) + "_s" +
                       std::to_string(s.split_index) + ".json";
    write_text_file(name, split_spec_to_json(s));
    std::cout << name << "  source " << s.source_classes.size() << "  target "
              << s.target_classes.size() << "  base " << s.base_classes.size()
              << "  novel " << s.novel_classes.size() << "  k " << s.k << "\n";
  }
  return 0;
}

int cmd_train(const CommonArgs& a, const std::string& stage1_flag) {
  // --stage1 supplies train.stage1_checkpoint, so splice it in before the
  // config document is validated
  json doc = json::parse(read_text_file(a.config_path));
  if (!stage1_flag.empty()) doc["train"]["stage1_checkpoint"] = stage1_flag;
  RunConfig cfg = parse_run_config(doc.dump());
  Dataset ds = load_dataset(a.dataset_dir);
  Vocabulary vocab = dataset_vocab(ds.manifest, cfg.model.text.max_tokens);
  std::string digest = config_hash(cfg);
  std::string out_dir = resolve_out(a.out_dir);
  fs::create_directories(out_dir);

  Model model;
  std::vector<StageProvenance> provenance;
  if (cfg.train.regime == "prompt_only") {
    std::string stage1 =
        !stage1_flag.empty() ? stage1_flag : cfg.train.stage1_checkpoint;
    if (stage1.empty())
      throw ConfigError(
          "train.regime=prompt_only needs a stage-1 checkpoint "
          "(--stage1 or train.stage1_checkpoint)");
    model = load_model(stage1, vocab, &provenance);
    if (model.prompted)
      throw ConfigError("stage-1 checkpoint already carries prompt banks");
    attach_prompts(model.params, cfg.prompts, model.config, cfg.train.seed);
    model.prompts = cfg.prompts;
    model.prompted = true;
    validate_prompted_vocab(vocab, class_names(ds.manifest.classes), cfg.prompts);
  } else {
    ModelConfig mc = cfg.model;
    if (mc.text.vocab_size == 0) mc.text.vocab_size = vocab.size();
    model.config = mc;
    model.params = init_dual_encoder(mc);
    model.vocab = vocab;
  }
  if (model.vocab.id_to_word.empty()) model.vocab = vocab;

  std::map<int, std::vector<int>> samples;
  std::string suffix;
  if (!a.split_files.empty()) {
    if (a.split_files.size() != 1)
      throw ConfigError("train takes at most one --split file");
    SplitSpec spec = split_spec_from_json(read_text_file(a.split_files[0]));
    if (spec.train_samples.empty())
      throw ConfigError("split file has no train samples");
    samples = spec.train_samples;
    suffix = "_s" + std::to_string(spec.split_index);
  } else {
    std::vector<int> all(static_cast<size_t>(ds.manifest.gen.train_per_class));
    for (int i = 0; i < ds.manifest.gen.train_per_class; ++i)
      all[static_cast<size_t>(i)] = i;
    for (const ClassSpec& c : ds.manifest.classes) samples[c.class_id] = all;
  }

  TrainResult result = train(model, ds, cfg.train, samples);

  StageProvenance stage;
  stage.stage = static_cast<int>(provenance.size()) + 1;
  stage.regime = cfg.train.regime;
  stage.config_digest = digest;
  stage.epochs = cfg.train.epochs;
  stage.final_loss = result.final_loss;
  stage.seed = cfg.train.seed;
  provenance.push_back(stage);

  std::string ckpt = out_dir + "/ckpt_" + digest + suffix + ".bin";
  std::string curve = out_dir + "/loss_" + digest + suffix + ".json";
  save_checkpoint(ckpt, model, provenance);
  save_loss_curve(curve, result, digest, cfg.train.seed);
  std::cout << "final_loss " << result.final_loss << " over " << result.steps
            << " steps\ncheckpoint " << ckpt << "\nloss_curve " << curve << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& a) {
  RunConfig cfg = load_run_config(a.config_path);
  Dataset ds = load_dataset(a.dataset_dir);
  Vocabulary vocab = dataset_vocab(ds.manifest, cfg.model.text.max_tokens);
  std::string ckpt_digest;
  Model model = load_model(a.checkpoint_path, vocab, nullptr, &ckpt_digest);

  std::vector<SplitSpec> splits;
  if (!a.split_files.empty()) {
    for (const std::string& f : a.split_files)
      splits.push_back(split_spec_from_json(read_text_file(f)));
  } else {
    splits = config_splits(ds.manifest, cfg.protocol);
  }
  EvalOptions opt = eval_options(cfg);
  std::vector<SplitMetrics> metrics;
  for (const SplitSpec& s : splits)
    metrics.push_back(run_protocol_split(s, model, ds, opt));
  EvalReport report = aggregate_splits(cfg.protocol.setting, metrics);
  report.config_digest = config_hash(cfg);
  report.seed = cfg.protocol.seed;

  std::string out_dir = resolve_out(a.out_dir);
  fs::create_directories(out_dir);
  std::string path =
      out_dir + "/eval_" + cfg.protocol.setting + "_" + report.config_digest + ".json";
  json record = json::parse(eval_report_to_json(report));
  record["label"] = regime_label(cfg, model.prompted);
  record["k"] = cfg.protocol.k;
  record["checkpoint_digest"] = ckpt_digest;
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << record.dump() << "\n";
  }

  ReportRow row{record["label"].get<std::string>(), report.mean, report.stddev,
                static_cast<int>(report.splits.size())};
  std::cout << render_metric_table({row}) << "results " << path << "\n";
  return 0;
}

int cmd_export_embeddings(const CommonArgs& a) {
  RunConfig cfg = load_run_config(a.config_path);
  Dataset ds = load_dataset(a.dataset_dir);
  Vocabulary vocab = dataset_vocab(ds.manifest, cfg.model.text.max_tokens);
  std::string ckpt_digest;
  Model model = load_model(a.checkpoint_path, vocab, nullptr, &ckpt_digest);

  SplitSpec spec;
  if (!a.split_files.empty()) {
    if (a.split_files.size() != 1)
      throw ConfigError("export-embeddings takes at most one --split file");
    spec = split_spec_from_json(read_text_file(a.split_files[0]));
  } else {
    spec = config_splits(ds.manifest, cfg.protocol).front();
  }
  EvalOutcome outcome;
  run_protocol_split(spec, model, ds, eval_options(cfg), &outcome);

  EmbeddingDump dump;
  dump.dim = model.config.embed_dim;
  dump.checkpoint_digest = ckpt_digest;
  for (int cid : outcome.class_ids) {
    int slot = ds.class_slot(cid);
    dump.class_names.push_back(ds.manifest.classes[static_cast<size_t>(slot)].name);
  }
  dump.video_ids = outcome.video_ids;
  for (int label : outcome.true_labels)
    dump.class_ids.push_back(outcome.class_ids[static_cast<size_t>(label)]);
  dump.embeddings = outcome.embeddings;

  std::string out_dir = resolve_out(a.out_dir);
  fs::create_directories(out_dir);
  std::string path = out_dir + "/emb_" + spec.setting + "_" + config_hash(cfg) +
                     "_s" + std::to_string(spec.split_index) + ".bin";
  save_embedding_dump(path, dump);
  std::cout << "embeddings " << path << " rows " << dump.video_ids.size() << "\n";
  return 0;
}

int cmd_report(const std::string& results_dir_flag, const std::string& out_flag) {
  std::string results_dir = resolve_out(results_dir_flag);
  std::string out_dir = out_flag.empty() ? results_dir : out_flag;
  fs::create_directories(out_dir);

  std::vector<ReportRow> rows;
  struct KPoint {
    int k;
    double top1;
  };
  std::map<std::string, std::vector<KPoint>> few_shot;  // label -> (k, top1)
  std::vector<fs::path> eval_files, loss_files;
  if (fs::exists(results_dir)) {
    for (const auto& e : fs::directory_iterator(results_dir)) {
      std::string name = e.path().filename().string();
      if (name.rfind("eval_", 0) == 0 && e.path().extension() == ".json")
        eval_files.push_back(e.path());
      if (name.rfind("loss_", 0) == 0 && e.path().extension() == ".json")
        loss_files.push_back(e.path());
    }
  }
  std::sort(eval_files.begin(), eval_files.end());
  std::sort(loss_files.begin(), loss_files.end());

  for (const fs::path& f : eval_files) {
    std::istringstream lines(read_text_file(f.string()));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      EvalReport r = eval_report_from_json(line);
      std::string label = r.setting;
      int k = 0;
      json j = json::parse(line);
      if (j.contains("label")) label = j["label"].get<std::string>();
      if (j.contains("k")) k = j["k"].get<int>();
      rows.push_back(ReportRow{label + " [" + r.setting + "]", r.mean, r.stddev,
                               static_cast<int>(r.splits.size())});
      if (r.setting == "few_shot") few_shot[label].push_back({k, r.mean.top1});
    }
  }

  std::string table = render_metric_table(rows);
  write_text_file(out_dir + "/report.txt", table);
  std::cout << table;

  if (!loss_files.empty()) {
    std::vector<Series> series;
    for (const fs::path& f : loss_files) {
      TrainResult r = load_loss_curve(f.string());
      Series s;
      s.name = f.filename().string();
      for (const StepLog& log : r.curve) {
        s.x.push_back(log.step);
        s.y.push_back(log.loss);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    if (!series.empty())
      write_bmp(out_dir + "/plot_loss.bmp", render_line_plot(series, 480, 320));
  }
  if (!few_shot.empty()) {
    std::vector<Series> series;
    for (auto& [label, pts] : few_shot) {
      std::sort(pts.begin(), pts.end(),
                [](const KPoint& a, const KPoint& b) { return a.k < b.k; });
      Series s;
      s.name = label;
      for (const KPoint& p : pts) {
        s.x.push_back(p.k);
        s.y.push_back(p.top1);
      }
      series.push_back(std::move(s));
    }
    write_bmp(out_dir + "/plot_few_shot.bmp", render_line_plot(series, 480, 320));
  }
  std::cout << "report " << out_dir << "/report.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic-video dual-encoder workbench"};
  app.require_subcommand(1);

  CommonArgs a;
  bool force = false;
  std::string setting = "zero_shot", stage1;
  int k = 16;
  uint64_t seed = 1;
  std::vector<std::string> targets;
  std::string results_dir;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", a.config_path)->required();
  gen->add_option("--out", a.out_dir);
  gen->add_flag("--force", force, "overwrite an existing dataset directory");

  auto* mk = app.add_subcommand("make-splits", "write protocol split files");
  mk->add_option("--dataset", a.dataset_dir)->required();
  mk->add_option("--setting", setting);
  mk->add_option("--k", k);
  mk->add_option("--seed", seed);
  mk->add_option("--out", a.out_dir);
  mk->add_option("--target", targets, "zero-shot target class name (repeatable)");

  auto* tr = app.add_subcommand("train", "optimize a model, write a checkpoint");
  tr->add_option("--config", a.config_path)->required();
  tr->add_option("--dataset", a.dataset_dir)->required();
  tr->add_option("--out", a.out_dir);
  tr->add_option("--split", a.split_files, "restrict training to a split file");
  tr->add_option("--stage1", stage1, "stage-1 checkpoint for prompt_only");

  auto* ev = app.add_subcommand("eval", "run the configured protocol");
  ev->add_option("--config", a.config_path)->required();
  ev->add_option("--dataset", a.dataset_dir)->required();
  ev->add_option("--checkpoint", a.checkpoint_path)->required();
  ev->add_option("--out", a.out_dir);
  ev->add_option("--split", a.split_files, "explicit split file (repeatable)");

  auto* ex = app.add_subcommand("export-embeddings", "dump per-video embeddings");
  ex->add_option("--config", a.config_path)->required();
  ex->add_option("--dataset", a.dataset_dir)->required();
  ex->add_option("--checkpoint", a.checkpoint_path)->required();
  ex->add_option("--out", a.out_dir);
  ex->add_option("--split", a.split_files, "explicit split file");

  auto* rp = app.add_subcommand("report", "tables and plots from results files");
  rp->add_option("--dir", results_dir, "results directory to aggregate");
  rp->add_option("--out", a.out_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(a.config_path, a.out_dir, force);
    if (mk->parsed())
      return cmd_make_splits(a.dataset_dir, setting, k, seed, a.out_dir, targets);
    if (tr->parsed()) return cmd_train(a, stage1);
    if (ev->parsed()) return cmd_eval(a);
    if (ex->parsed()) return cmd_export_embeddings(a);
    if (rp->parsed()) return cmd_report(results_dir, a.out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::validation);
  }
  return 0;
}
