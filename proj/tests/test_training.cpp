#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "octa/data.hpp"
#include "octa/schedules.hpp"
#include "octa/training.hpp"

namespace fs = std::filesystem;
using namespace octa;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::pair<SegManifest, ClsManifest> make_dataset(const fs::path& dir, int n, uint64_t seed) {
  SynthSpec spec;
  spec.n_samples = n;
  spec.image_size = 32;
  spec.class_count = 3;
  spec.seed = seed;
  return generate_synthetic(spec, dir.string());
}

RunConfig seg_config(const fs::path& run_dir, int epochs) {
  RunConfig cfg;
  cfg.task = Task::segmentation;
  cfg.model.task = Task::segmentation;
  cfg.model.arch = "tiny_unet";
  cfg.model.num_outputs = 1;
  cfg.model.input_size = 32;
  cfg.epochs = epochs;
  cfg.schedule = {ScheduleKind::cosine, 0.05, epochs};
  cfg.color_jitter = false;
  cfg.geometric_aug = false;
  cfg.run_dir = run_dir.string();
  return cfg;
}

RunConfig cls_config(const fs::path& run_dir, int epochs) {
  RunConfig cfg;
  cfg.task = Task::classification;
  cfg.model.task = Task::classification;
  cfg.model.arch = "tiny_cnn";
  cfg.model.num_outputs = 3;
  cfg.model.input_size = 32;
  cfg.epochs = epochs;
  cfg.schedule = {ScheduleKind::cosine, 0.01, epochs};
  cfg.optimizer = OptimizerKind::adam;
  cfg.selection = SelectionMetric::kappa;
  cfg.color_jitter = false;
  cfg.geometric_aug = false;
  cfg.folds_k = 2;
  cfg.run_dir = run_dir.string();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("name converters") {
  CHECK(loss_from_name("dice") == LossChoice::dice);
  CHECK(loss_from_name("jaccard") == LossChoice::jaccard);
  CHECK(loss_from_name("dice+jaccard") == LossChoice::dice_jaccard);
  CHECK_THROWS_AS(loss_from_name("focal"), std::invalid_argument);
  CHECK(selection_from_name("kappa") == SelectionMetric::kappa);
  CHECK(optimizer_from_name("sgd") == OptimizerKind::sgd);
  CHECK(optimizer_from_name("adam") == OptimizerKind::adam);
  CHECK_THROWS_AS(optimizer_from_name("lamb"), std::invalid_argument);
}

TEST_CASE("segmentation training learns and logs faithfully") {
  fs::path data = fresh_dir("octa_train_seg_data");
  fs::path run = fresh_dir("octa_train_seg_run");
  auto [seg, cls] = make_dataset(data, 20, 3);

  RunConfig cfg = seg_config(run, 5);
  TrainResult result = train_segmentation(cfg, seg, Lesion::IRMA);

  REQUIRE(result.log.epochs.size() == 5);
  // smoke regression: loss decreases over the short run
  CHECK(result.log.epochs.back().train_loss < result.log.epochs.front().train_loss);

  // lr column equals lr_at exactly
  for (const auto& e : result.log.epochs) CHECK(e.lr == lr_at(cfg.schedule, e.epoch));

  // selection correctness: best checkpoint is the max val metric, earliest tie
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& e : result.log.epochs)
    if (e.val_metric > best) {
      best = e.val_metric;
      best_epoch = e.epoch;
    }
  CHECK(result.checkpoint.val_metric_value == doctest::Approx(best));
  CHECK(result.checkpoint.epoch == best_epoch);
  CHECK(result.checkpoint.val_metric_name == "dice");

  // artifacts on disk
  CHECK(fs::exists(run / "checkpoint.bin"));
  CHECK(fs::exists(run / "checkpoint.meta"));
  std::string log = slurp(run / "log.csv");
  CHECK(log.rfind("epoch,train_loss,val_metric,lr", 0) == 0);

  // selection by iou is also valid and reports the right metric name
  fs::path run2 = fresh_dir("octa_train_seg_run2");
  RunConfig cfg2 = seg_config(run2, 5);
  cfg2.selection = SelectionMetric::iou;
  TrainResult r2 = train_segmentation(cfg2, seg, Lesion::IRMA);
  CHECK(r2.checkpoint.val_metric_name == "iou");

  fs::remove_all(data);
  fs::remove_all(run);
  fs::remove_all(run2);
}

TEST_CASE("segmentation training rejects unusable manifests") {
  fs::path data = fresh_dir("octa_train_seg_empty");
  fs::create_directories(data / "images");
  fs::create_directories(data / "masks" / "IRMA");
  // dataset exists but has no NV annotations at all
  auto [seg, cls] = make_dataset(data, 4, 1);
  SegManifest stripped = seg;
  for (auto& e : stripped.entries) e.mask_paths.erase(Lesion::NV);
  RunConfig cfg = seg_config(fresh_dir("octa_train_seg_empty_run"), 2);
  CHECK_THROWS(train_segmentation(cfg, stripped, Lesion::NV));
  fs::remove_all(data);
}

TEST_CASE("classifier training reaches a separable-kappa and logs mixing") {
  fs::path data = fresh_dir("octa_train_cls_data");
  fs::path run = fresh_dir("octa_train_cls_run");
  auto [seg, cls] = make_dataset(data, 40, 5);

  std::vector<int> labels;
  for (const auto& e : cls.entries) labels.push_back(e.label);
  FoldAssignment folds = split_folds_stratified(labels, 2, 5);

  RunConfig cfg = cls_config(run, 30);
  CvSummary summary = run_cv(cfg, cls, folds);

  REQUIRE(summary.checkpoints.size() == 2);
  std::set<int> fold_ids;
  for (const auto& c : summary.checkpoints) fold_ids.insert(c.fold_id);
  CHECK(fold_ids == std::set<int>{0, 1});
  CHECK(summary.mean_val_metric > 0.8);  // separable by construction
  CHECK(fs::exists(run / "summary.txt"));

  // per-fold artifacts, including the mix decision log
  for (int fold = 0; fold < 2; ++fold) {
    fs::path fold_dir = run / ("fold" + std::to_string(fold));
    CHECK(fs::exists(fold_dir / "checkpoint.bin"));
    CHECK(fs::exists(fold_dir / "log.csv"));
    std::string mix_log = slurp(fold_dir / "mix_log.csv");
    CHECK(mix_log.rfind("epoch,batch,mode,lambda", 0) == 0);
  }

  fs::remove_all(data);
  fs::remove_all(run);
}

TEST_CASE("classifier training demands every class in the training folds") {
  fs::path data = fresh_dir("octa_train_cls_missing");
  auto [seg, cls] = make_dataset(data, 9, 2);

  // force all class-2 samples into fold 0 so training fold 1's complement is
  // fine but training on complement of fold 0 lacks class 2
  FoldAssignment folds;
  folds.k = 2;
  folds.fold_of.assign(cls.entries.size(), 0);
  for (size_t i = 0; i < cls.entries.size(); ++i)
    folds.fold_of[i] = cls.entries[i].label == 2 ? 1 : 0;

  RunConfig cfg = cls_config(fresh_dir("octa_train_cls_missing_run"), 2);
  CHECK_THROWS_WITH_AS(train_classifier(cfg, cls, folds, 1), doctest::Contains("stratified"),
                       std::runtime_error);
  fs::remove_all(data);
}

TEST_CASE("training is reproducible under a fixed seed") {
  fs::path data = fresh_dir("octa_train_repro_data");
  auto [seg, cls] = make_dataset(data, 20, 9);
  std::vector<int> labels;
  for (const auto& e : cls.entries) labels.push_back(e.label);
  FoldAssignment folds = split_folds_stratified(labels, 2, 9);

  fs::path run_a = fresh_dir("octa_train_repro_a");
  fs::path run_b = fresh_dir("octa_train_repro_b");
  RunConfig cfg_a = cls_config(run_a, 5);
  cfg_a.mix.mix_prob = 0.5;
  cfg_a.seed = 9;
  RunConfig cfg_b = cfg_a;
  cfg_b.run_dir = run_b.string();

  TrainResult a = train_classifier(cfg_a, cls, folds, 0);
  TrainResult b = train_classifier(cfg_b, cls, folds, 0);

  CHECK(a.checkpoint.val_metric_value == doctest::Approx(b.checkpoint.val_metric_value).epsilon(1e-6));
  CHECK(slurp(run_a / "mix_log.csv") == slurp(run_b / "mix_log.csv"));
  CHECK(slurp(run_a / "log.csv") == slurp(run_b / "log.csv"));

  fs::remove_all(data);
  fs::remove_all(run_a);
  fs::remove_all(run_b);
}
