#pragma once

#include <memory>
#include <string>
#include <vector>

#include "octa/checkpoint.hpp"
#include "octa/data.hpp"
#include "octa/image.hpp"

namespace octa {

struct EnsembleSpec {
  std::vector<CheckpointRecord> members;
  std::vector<double> weights;  // empty = uniform; normalized to sum 1
};

/// Loaded ensemble: read-only model handles plus normalized member weights.
class Ensemble {
 public:
  explicit Ensemble(const EnsembleSpec& spec);

  size_t size() const { return models_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  Model& member(size_t i) { return *models_[i]; }

 private:
  std::vector<std::unique_ptr<Model>> models_;
  std::vector<double> weights_;
};

struct Prediction {
  // classification
  std::vector<double> probs;
  int cls = -1;
  // segmentation
  ImageArray prob_map;
  ImageArray mask;
};

/// Weighted mean over members of the TTA-averaged class probabilities.
Prediction predict_cls(Ensemble& ensemble, const ImageArray& img, int tta_t = 1);

/// Pixelwise probability averaging (TTA predictions are mapped back through
/// the inverse spatial transform first), then thresholding.
Prediction predict_seg(Ensemble& ensemble, const ImageArray& img, double threshold = 0.5,
                       int tta_t = 1);

/// Classification: predictions.csv with header case,class,P0,...,P{K-1} and
/// 6-decimal probabilities. Segmentation: one {0,255} PNG per image under
/// <out_dir>/<lesion>/ (the ensemble is per-lesion; call once per lesion).
/// Partial outputs are removed on failure. Returns the number of cases
/// written; an empty path list yields a header-only CSV.
size_t predict_dataset(Ensemble& ensemble, const std::vector<std::string>& image_paths,
                       const std::string& out_dir, Task task, int tta_t = 1,
                       double threshold = 0.5, Lesion lesion = Lesion::IRMA);

}  // namespace octa
