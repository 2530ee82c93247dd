#pragma once

#include <optional>
#include <string>
#include <vector>

#include "octa/augment.hpp"
#include "octa/checkpoint.hpp"
#include "octa/data.hpp"
#include "octa/models.hpp"
#include "octa/schedules.hpp"

namespace octa {

enum class LossChoice { dice, jaccard, dice_jaccard };
LossChoice loss_from_name(const std::string& name);
const char* loss_name(LossChoice l);

enum class SelectionMetric { dice, iou, kappa };
SelectionMetric selection_from_name(const std::string& name);
const char* selection_name(SelectionMetric m);

enum class OptimizerKind { sgd, adam };
OptimizerKind optimizer_from_name(const std::string& name);
const char* optimizer_name(OptimizerKind o);

struct RunConfig {
  Task task = Task::segmentation;
  ModelSpec model;
  ScheduleSpec schedule;
  MixConfig mix;  // classification only
  LossChoice loss = LossChoice::dice;
  SelectionMetric selection = SelectionMetric::dice;
  int epochs = 100;
  OptimizerKind optimizer = OptimizerKind::adam;
  uint64_t seed = 0;
  bool color_jitter = true;
  double jitter_strength = 0.4;
  bool geometric_aug = true;
  int batch_size = 8;
  int folds_k = 5;
  double label_smoothing = 0.1;
  std::string run_dir = "runs/run";
  std::string pretrained;  // optional checkpoint weights to adapt from
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  double wall_seconds = 0.0;
  uint64_t seed = 0;
  CheckpointRecord best;
};

struct TrainResult {
  CheckpointRecord checkpoint;
  TrainLog log;
};

/// Train one segmentation model on the images annotated for `lesion`, with an
/// internal 80/20 train/val split. The checkpoint with the best validation
/// metric is kept (ties: earliest epoch). Writes checkpoint.bin,
/// checkpoint.meta and log.csv under cfg.run_dir.
TrainResult train_segmentation(const RunConfig& cfg, const SegManifest& manifest, Lesion lesion);

/// Train one classification fold with the hybrid mix strategy and the joint
/// raw+mixed objective. Mix decisions are logged to mix_log.csv.
TrainResult train_classifier(const RunConfig& cfg, const ClsManifest& manifest,
                             const FoldAssignment& folds, int fold_id);

struct CvSummary {
  std::vector<CheckpointRecord> checkpoints;
  double mean_val_metric = 0.0;
  double std_val_metric = 0.0;
};

/// Run every fold of a classification cross-validation; per-fold outputs go
/// to cfg.run_dir/fold<k>/ and a summary to cfg.run_dir/summary.txt.
CvSummary run_cv(const RunConfig& cfg, const ClsManifest& manifest, const FoldAssignment& folds);

}  // namespace octa
