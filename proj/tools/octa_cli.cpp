// octa: training, inference and evaluation toolkit for OCTA-style retinal
// image analysis. Subcommands: synth, split, train-seg, train-cls, predict,
// ensemble, evaluate, report.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "octa/checkpoint.hpp"
#include "octa/config.hpp"
#include "octa/data.hpp"
#include "octa/inference.hpp"
#include "octa/metrics.hpp"
#include "octa/report.hpp"
#include "octa/training.hpp"

namespace fs = std::filesystem;
using namespace octa;

namespace {

std::string runs_root() {
  const char* env = std::getenv("DEEPOCTA_RUNS_DIR");
  return env ? env : "runs";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> dataset_images(const std::string& root) {
  std::vector<std::string> out;
  fs::path dir = fs::path(root) / "images";
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Accept run dirs (checkpoint.meta inside, or per-fold subdirs) and direct
/// .meta paths.
std::vector<CheckpointRecord> resolve_members(const std::vector<std::string>& items) {
  std::vector<CheckpointRecord> members;
  for (const auto& item : items) {
    fs::path p(item);
    if (fs::is_regular_file(p)) {
      members.push_back(read_checkpoint_meta(p.string()));
      continue;
    }
    if (fs::exists(p / "checkpoint.meta")) {
      members.push_back(read_checkpoint_meta((p / "checkpoint.meta").string()));
      continue;
    }
    bool found = false;
    for (int fold = 0;; ++fold) {
      fs::path meta = p / ("fold" + std::to_string(fold)) / "checkpoint.meta";
      if (!fs::exists(meta)) break;
      members.push_back(read_checkpoint_meta(meta.string()));
      found = true;
    }
    if (!found) throw std::runtime_error("no checkpoint found under " + item);
  }
  return members;
}

// Config resolution order: built-in defaults, then --config file, then flags.
struct FlagBinding {
  std::string key;
  std::string value;
  bool set = false;
};

class ConfigBuilder {
 public:
  explicit ConfigBuilder(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_, "config file (sectioned key = value)");
  }

  /// Register a flag whose value lands in the resolved config under `key`.
  void bind(const std::string& flag, const std::string& key, const std::string& def,
            const std::string& help) {
    bindings_.push_back({key, def, false});
    auto* b = &bindings_.back();
    cmd_->add_option_function<std::string>(
        flag,
        [b](const std::string& v) {
          b->value = v;
          b->set = true;
        },
        help + " [" + def + "]");
  }

  Config resolve() const {
    Config cfg;
    for (const auto& b : bindings_) cfg.set(b.key, b.value);
    if (!config_path_.empty()) {
      Config file = Config::load(config_path_);
      for (const auto& [k, v] : file.values()) cfg.set(k, v);
    }
    for (const auto& b : bindings_)
      if (b.set) cfg.set(b.key, b.value);
    return cfg;
  }

 private:
  CLI::App* cmd_;
  std::string config_path_;
  std::deque<FlagBinding> bindings_storage_;
  // deque keeps pointers stable as bindings are added
  std::deque<FlagBinding>& bindings_ = bindings_storage_;
};

RunConfig run_config_from(const Config& cfg, Task task) {
  RunConfig rc;
  rc.task = task;
  rc.seed = cfg.get_u64("run.seed", 0);
  rc.epochs = cfg.get_int("run.epochs", 100);
  rc.batch_size = cfg.get_int("run.batch_size", task == Task::segmentation ? 8 : 16);
  rc.optimizer = optimizer_from_name(
      cfg.get_or("run.optimizer", task == Task::segmentation ? "adam" : "sgd"));
  rc.loss = loss_from_name(cfg.get_or("run.loss", "dice"));
  rc.selection = selection_from_name(
      cfg.get_or("run.selection_metric", task == Task::segmentation ? "dice" : "kappa"));
  rc.schedule.kind = schedule_from_name(
      cfg.get_or("run.schedule", task == Task::segmentation ? "step1" : "cosine"));
  rc.schedule.lr0 = cfg.get_double("run.lr0", task == Task::segmentation ? 1e-4 : 1e-3);
  rc.schedule.total_epochs = rc.epochs;
  rc.folds_k = cfg.get_int("run.folds", 5);

  rc.model.task = task;
  rc.model.arch = cfg.get_or("model.arch", task == Task::segmentation ? "tiny_unet" : "tiny_cnn");
  rc.model.input_size = cfg.get_int("model.input_size", 64);
  rc.model.num_outputs = cfg.get_int("model.num_outputs", task == Task::segmentation ? 1 : 3);
  rc.pretrained = cfg.get_or("model.pretrained", "");
  rc.model.pretrain_source = rc.pretrained.empty() ? "none" : "external_checkpoint";

  rc.color_jitter = cfg.get_bool("augment.color_jitter", true);
  rc.jitter_strength = cfg.get_double("augment.jitter_strength", 0.4);
  rc.geometric_aug = cfg.get_bool("augment.geometric", true);

  rc.mix.mix_prob = cfg.get_double("mix.mix_prob", 0.5);
  rc.mix.alpha1 = cfg.get_double("mix.alpha1", 0.4);
  rc.mix.alpha2 = cfg.get_double("mix.alpha2", 1.0);
  rc.mix.cutmix_share = cfg.get_double("mix.cutmix_share", 0.5);
  rc.label_smoothing = cfg.get_double("mix.label_smoothing", 0.1);
  return rc;
}

void echo_config(const Config& cfg, const std::string& run_dir) {
  fs::create_directories(run_dir);
  cfg.save((fs::path(run_dir) / "config.echo.cfg").string());
}

int dispatch(int argc, char** argv) {
  CLI::App app{"OCTA diabetic-retinopathy analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  bool dry_run = false;
  app.add_flag("--dry-run", dry_run, "validate and print the resolved plan without executing");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic OCTA-like dataset");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output dataset root")->required();
  ConfigBuilder synth_cfg(synth);
  synth_cfg.bind("--n", "synth.n", "20", "sample count");
  synth_cfg.bind("--size", "synth.size", "64", "image size in pixels");
  synth_cfg.bind("--classes", "synth.classes", "3", "class count");
  synth_cfg.bind("--blobs-min", "synth.blobs_min", "1", "min lesion blobs per image");
  synth_cfg.bind("--blobs-max", "synth.blobs_max", "3", "max lesion blobs per image");
  synth_cfg.bind("--noise", "synth.noise", "0.05", "gaussian noise level");
  synth_cfg.bind("--seed", "synth.seed", "0", "rng seed");

  // ---- split ----
  auto* split = app.add_subcommand("split", "assign cross-validation folds");
  std::string split_root, split_out;
  split->add_option("--root", split_root, "dataset root (needs labels.csv)")->required();
  split->add_option("--out", split_out, "output folds.csv [<root>/folds.csv]");
  ConfigBuilder split_cfg(split);
  split_cfg.bind("--k", "run.folds", "5", "fold count");
  split_cfg.bind("--seed", "run.seed", "0", "rng seed");
  split_cfg.bind("--stratified", "run.stratified", "true", "stratify folds by class");

  // ---- train-seg ----
  auto* tseg = app.add_subcommand("train-seg", "train a lesion segmentation model");
  std::string tseg_root, tseg_lesion, tseg_dir;
  tseg->add_option("--root", tseg_root, "dataset root")->required();
  tseg->add_option("--lesion", tseg_lesion, "lesion id: IRMA | NPA | NV")->required();
  tseg->add_option("--run-dir", tseg_dir, "run directory [<runs>/seg_<lesion>]");
  ConfigBuilder tseg_cfg(tseg);
  tseg_cfg.bind("--arch", "model.arch", "tiny_unet", "architecture key");
  tseg_cfg.bind("--input-size", "model.input_size", "64", "model input size");
  tseg_cfg.bind("--epochs", "run.epochs", "100", "training epochs");
  tseg_cfg.bind("--lr0", "run.lr0", "0.0001", "initial learning rate");
  tseg_cfg.bind("--schedule", "run.schedule", "step1", "lr schedule: step1|step2|cosine");
  tseg_cfg.bind("--loss", "run.loss", "dice", "loss: dice|jaccard|dice+jaccard");
  tseg_cfg.bind("--metric", "run.selection_metric", "dice", "selection metric: dice|iou");
  tseg_cfg.bind("--optimizer", "run.optimizer", "adam", "optimizer: sgd|adam");
  tseg_cfg.bind("--batch", "run.batch_size", "8", "batch size");
  tseg_cfg.bind("--seed", "run.seed", "0", "rng seed");
  tseg_cfg.bind("--color-jitter", "augment.color_jitter", "true", "photometric jitter on/off");
  tseg_cfg.bind("--jitter-strength", "augment.jitter_strength", "0.4", "jitter strength");
  tseg_cfg.bind("--geometric", "augment.geometric", "true", "geometric augmentation on/off");
  tseg_cfg.bind("--pretrained", "model.pretrained", "", "checkpoint weights to adapt from");

  // ---- train-cls ----
  auto* tcls = app.add_subcommand("train-cls", "train a grading/IQA classifier");
  std::string tcls_root, tcls_dir, tcls_folds, tcls_fold = "all";
  tcls->add_option("--root", tcls_root, "dataset root")->required();
  tcls->add_option("--run-dir", tcls_dir, "run directory [<runs>/cls]");
  tcls->add_option("--folds", tcls_folds, "folds.csv [<root>/folds.csv, generated if absent]");
  tcls->add_option("--fold", tcls_fold, "fold id to train, or 'all' for full CV [all]");
  ConfigBuilder tcls_cfg(tcls);
  tcls_cfg.bind("--arch", "model.arch", "tiny_cnn", "architecture key");
  tcls_cfg.bind("--input-size", "model.input_size", "64", "model input size");
  tcls_cfg.bind("--epochs", "run.epochs", "100", "training epochs");
  tcls_cfg.bind("--lr0", "run.lr0", "0.001", "initial learning rate");
  tcls_cfg.bind("--schedule", "run.schedule", "cosine", "lr schedule: step1|step2|cosine");
  tcls_cfg.bind("--optimizer", "run.optimizer", "sgd", "optimizer: sgd|adam");
  tcls_cfg.bind("--batch", "run.batch_size", "16", "batch size");
  tcls_cfg.bind("--k", "run.folds", "5", "fold count when generating folds");
  tcls_cfg.bind("--seed", "run.seed", "0", "rng seed");
  tcls_cfg.bind("--mix-prob", "mix.mix_prob", "0.5", "probability a batch is mixed");
  tcls_cfg.bind("--alpha1", "mix.alpha1", "0.4", "MixUp beta parameter");
  tcls_cfg.bind("--alpha2", "mix.alpha2", "1.0", "CutMix beta parameter");
  tcls_cfg.bind("--cutmix-share", "mix.cutmix_share", "0.5", "P(CutMix | mixed)");
  tcls_cfg.bind("--epsilon", "mix.label_smoothing", "0.1", "label smoothing epsilon");
  tcls_cfg.bind("--color-jitter", "augment.color_jitter", "true", "photometric jitter on/off");
  tcls_cfg.bind("--jitter-strength", "augment.jitter_strength", "0.4", "jitter strength");
  tcls_cfg.bind("--geometric", "augment.geometric", "true", "geometric augmentation on/off");
  tcls_cfg.bind("--pretrained", "model.pretrained", "", "checkpoint weights to adapt from");

  // ---- predict ----
  auto* pred = app.add_subcommand("predict", "run (ensemble) inference over a dataset");
  std::string pred_task, pred_members, pred_root, pred_out, pred_lesion = "IRMA",
              pred_weights;
  int pred_tta = 1;
  double pred_threshold = 0.5;
  pred->add_option("--task", pred_task, "seg | cls")->required();
  pred->add_option("--ensemble", pred_members, "comma-separated run dirs / .meta files")
      ->required();
  pred->add_option("--root", pred_root, "dataset root (images/ inside)")->required();
  pred->add_option("--out", pred_out, "output directory")->required();
  pred->add_option("--tta", pred_tta, "test-time augmentation count [1]");
  pred->add_option("--threshold", pred_threshold, "mask threshold (seg) [0.5]");
  pred->add_option("--lesion", pred_lesion, "lesion subdir for seg output [IRMA]");
  pred->add_option("--weights", pred_weights, "comma-separated member weights [uniform]");

  // ---- ensemble ----
  auto* ens = app.add_subcommand("ensemble", "write an ensemble manifest from run dirs");
  std::string ens_members, ens_out;
  ens->add_option("--members", ens_members, "comma-separated run dirs")->required();
  ens->add_option("--out", ens_out, "manifest output path")->required();

  // ---- evaluate ----
  auto* eval = app.add_subcommand("evaluate", "score predictions against ground truth");
  std::string eval_task, eval_pred, eval_gt, eval_out;
  eval->add_option("--task", eval_task, "seg | cls")->required();
  eval->add_option("--pred", eval_pred, "predictions.csv (cls) or mask dir (seg)")->required();
  eval->add_option("--gt", eval_gt, "ground-truth dataset root")->required();
  eval->add_option("--out", eval_out, "report output prefix (writes .txt and .kv)");

  // ---- report ----
  auto* rep = app.add_subcommand("report", "comparison table over finished runs");
  std::string rep_runs;
  rep->add_option("--runs", rep_runs, "comma-separated run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // all command-line validation problems map to exit 1
  }

  if (synth->parsed()) {
    Config cfg = synth_cfg.resolve();
    SynthSpec spec;
    spec.n_samples = cfg.get_int("synth.n", 20);
    spec.image_size = cfg.get_int("synth.size", 64);
    spec.class_count = cfg.get_int("synth.classes", 3);
    spec.lesion_blob_count_min = cfg.get_int("synth.blobs_min", 1);
    spec.lesion_blob_count_max = cfg.get_int("synth.blobs_max", 3);
    spec.noise_level = cfg.get_double("synth.noise", 0.05);
    spec.seed = cfg.get_u64("synth.seed", 0);
    if (dry_run) {
      std::cout << "plan: generate " << spec.n_samples << " samples of " << spec.image_size
                << "x" << spec.image_size << " under " << synth_out << "\n" << cfg.to_text();
      return 0;
    }
    auto [seg, cls] = generate_synthetic(spec, synth_out);
    std::cout << "wrote " << cls.entries.size() << " images under " << synth_out << "\n";
    return 0;
  }

  if (split->parsed()) {
    Config cfg = split_cfg.resolve();
    ClsManifest manifest = load_cls_manifest(split_root);
    int k = cfg.get_int("run.folds", 5);
    uint64_t seed = cfg.get_u64("run.seed", 0);
    bool stratified = cfg.get_bool("run.stratified", true);
    if (split_out.empty()) split_out = (fs::path(split_root) / "folds.csv").string();
    if (dry_run) {
      std::cout << "plan: split " << manifest.entries.size() << " entries into " << k
                << (stratified ? " stratified" : "") << " folds -> " << split_out << "\n";
      return 0;
    }
    std::vector<int> labels;
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    FoldAssignment folds = stratified ? split_folds_stratified(labels, k, seed)
                                      : split_folds(manifest.entries.size(), k, seed);
    write_folds_csv(split_out, manifest, folds);
    std::cout << "wrote " << split_out << "\n";
    return 0;
  }

  if (tseg->parsed()) {
    Config cfg = tseg_cfg.resolve();
    cfg.set("run.task", "seg");
    Lesion lesion = lesion_from_name(tseg_lesion);
    if (tseg_dir.empty())
      tseg_dir = (fs::path(runs_root()) / ("seg_" + lesion_name(lesion))).string();
    RunConfig rc = run_config_from(cfg, Task::segmentation);
    rc.run_dir = tseg_dir;
    if (dry_run) {
      std::cout << "plan: train " << rc.model.arch << " on " << lesion_name(lesion) << " for "
                << rc.epochs << " epochs -> " << tseg_dir << "\n" << cfg.to_text();
      return 0;
    }
    echo_config(cfg, tseg_dir);
    SegManifest manifest = load_seg_manifest(tseg_root);
    TrainResult result = train_segmentation(rc, manifest, lesion);
    std::cout << "best " << result.checkpoint.val_metric_name << " "
              << result.checkpoint.val_metric_value << " at epoch " << result.checkpoint.epoch
              << " (" << tseg_dir << ")\n";
    return 0;
  }

  if (tcls->parsed()) {
    Config cfg = tcls_cfg.resolve();
    cfg.set("run.task", "cls");
    if (tcls_dir.empty()) tcls_dir = (fs::path(runs_root()) / "cls").string();
    RunConfig rc = run_config_from(cfg, Task::classification);
    rc.run_dir = tcls_dir;
    if (dry_run) {
      std::cout << "plan: train " << rc.model.arch << " (mix_prob "
                << cfg.get_or("mix.mix_prob", "0.5") << ", fold " << tcls_fold << ") -> "
                << tcls_dir << "\n" << cfg.to_text();
      return 0;
    }
    echo_config(cfg, tcls_dir);
    ClsManifest manifest = load_cls_manifest(tcls_root);
    rc.model.num_outputs = manifest.class_count;

    if (tcls_folds.empty()) tcls_folds = (fs::path(tcls_root) / "folds.csv").string();
    FoldAssignment folds;
    if (fs::exists(tcls_folds)) {
      folds = read_folds_csv(tcls_folds, manifest);
    } else {
      std::vector<int> labels;
      for (const auto& e : manifest.entries) labels.push_back(e.label);
      folds = split_folds_stratified(labels, rc.folds_k, rc.seed);
      write_folds_csv(tcls_folds, manifest, folds);
    }

    if (tcls_fold == "all") {
      CvSummary summary = run_cv(rc, manifest, folds);
      std::cout << "cv mean kappa " << summary.mean_val_metric << " +/- "
                << summary.std_val_metric << " over " << folds.k << " folds (" << tcls_dir
                << ")\n";
    } else {
      int fold = std::stoi(tcls_fold);
      RunConfig fold_rc = rc;
      fold_rc.run_dir = (fs::path(tcls_dir) / ("fold" + std::to_string(fold))).string();
      TrainResult result = train_classifier(fold_rc, manifest, folds, fold);
      std::cout << "fold " << fold << " best kappa " << result.checkpoint.val_metric_value
                << " at epoch " << result.checkpoint.epoch << "\n";
    }
    return 0;
  }

  if (pred->parsed()) {
    Task task = task_from_name(pred_task);
    EnsembleSpec spec;
    spec.members = resolve_members(split_list(pred_members));
    for (const auto& w : split_list(pred_weights)) spec.weights.push_back(std::stod(w));
    auto images = dataset_images(pred_root);
    if (dry_run) {
      std::cout << "plan: predict " << images.size() << " images with " << spec.members.size()
                << " member(s), tta " << pred_tta << " -> " << pred_out << "\n";
      return 0;
    }
    Ensemble ensemble(spec);
    if (images.empty()) std::cerr << "warning: empty dataset, writing header-only output\n";
    size_t n = predict_dataset(ensemble, images, pred_out, task, pred_tta, pred_threshold,
                               lesion_from_name(pred_lesion));
    std::cout << "wrote predictions for " << n << " case(s) to " << pred_out << "\n";
    return 0;
  }

  if (ens->parsed()) {
    auto members = resolve_members(split_list(ens_members));
    if (dry_run) {
      std::cout << "plan: manifest of " << members.size() << " member(s) -> " << ens_out << "\n";
      return 0;
    }
    std::ofstream out(ens_out);
    if (!out) throw std::runtime_error("cannot write " + ens_out);
    out << "# ensemble manifest: meta_path weights_hash val_metric\n";
    for (const auto& m : members) {
      fs::path meta = fs::path(m.weights_path).parent_path() / "checkpoint.meta";
      out << meta.string() << " " << std::hex << m.weights_hash << std::dec << " "
          << m.val_metric_value << "\n";
    }
    std::cout << "wrote " << ens_out << "\n";
    return 0;
  }

  if (eval->parsed()) {
    Task task = task_from_name(eval_task);
    if (dry_run) {
      std::cout << "plan: evaluate " << eval_pred << " against " << eval_gt << "\n";
      return 0;
    }
    EvalReport report;
    std::string task_key;
    if (task == Task::segmentation) {
      report = evaluate_seg(eval_pred, load_seg_manifest(eval_gt));
      task_key = "seg";
    } else {
      report = evaluate_cls(eval_pred, load_cls_manifest(eval_gt));
      task_key = "cls";
    }
    std::cout << report.to_table(task_key);
    if (!eval_out.empty()) {
      std::ofstream txt(eval_out + ".txt");
      txt << report.to_table(task_key);
      report.write_keyvalue(eval_out + ".kv", task_key);
    }
    return 0;
  }

  if (rep->parsed()) {
    auto dirs = split_list(rep_runs);
    if (dry_run) {
      std::cout << "plan: report over " << dirs.size() << " run(s)\n";
      return 0;
    }
    std::cout << write_report(dirs);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
