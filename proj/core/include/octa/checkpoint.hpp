#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octa/models.hpp"

namespace octa {

/// Trained-weights reference plus the metadata that makes it ensemble-able.
struct CheckpointRecord {
  std::string weights_path;
  ModelSpec spec;
  int fold_id = -1;
  int epoch = 0;
  std::string val_metric_name;  // dice | iou | kappa
  double val_metric_value = 0.0;
  uint64_t seed = 0;
  uint64_t weights_hash = 0;
};

/// FNV-1a 64 over a file's bytes; stamps checkpoints for ensemble manifests.
uint64_t file_hash(const std::string& path);

/// Write the weights blob and its sidecar metadata (weights_path + ".meta"
/// when given "checkpoint.bin" style paths use meta_path).
void save_checkpoint(const std::string& weights_path, const std::string& meta_path, Model& model,
                     CheckpointRecord& record);

CheckpointRecord read_checkpoint_meta(const std::string& meta_path);

/// Build the model described by the record and load its weights.
std::unique_ptr<Model> load_checkpoint(const CheckpointRecord& record);

struct AdaptReport {
  std::vector<std::string> loaded;
  std::vector<std::string> skipped;  // head groups reinitialized
};

/// Load trunk weights from a checkpoint blob into an existing model. Head
/// groups ("head.*") with mismatched shapes are reinitialized unless
/// strict_head; a trunk mismatch is always a hard error.
AdaptReport adapt_pretrained(Model& model, const std::string& weights_path,
                             bool strict_head = false, uint64_t reinit_seed = 0);

}  // namespace octa
