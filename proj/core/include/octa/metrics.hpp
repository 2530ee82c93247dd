#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "octa/data.hpp"
#include "octa/image.hpp"

namespace octa {

/// rows = truth, cols = prediction.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long long> counts;  // k*k, row-major

  explicit ConfusionMatrix(int k_) : k(k_), counts(static_cast<size_t>(k_) * k_, 0) {}
  long long& at(int truth, int pred) { return counts[static_cast<size_t>(truth) * k + pred]; }
  long long at(int truth, int pred) const { return counts[static_cast<size_t>(truth) * k + pred]; }
  long long total() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int k);

// ---- segmentation metrics (hard, thresholded masks) ----

double hard_dice(const ImageArray& pred_mask, const ImageArray& gt_mask);
double hard_iou(const ImageArray& pred_mask, const ImageArray& gt_mask);

// ---- classification metrics ----

enum class KappaWeights { quadratic, linear, none };

/// Chance-corrected agreement, quadratic ordinal weighting by default.
/// Degenerate case (both weighted sums zero) returns 1.
double weighted_kappa(const std::vector<int>& y_true, const std::vector<int>& y_pred, int k,
                      KappaWeights weights = KappaWeights::quadratic);

inline double quadratic_weighted_kappa(const std::vector<int>& y_true,
                                       const std::vector<int>& y_pred, int k) {
  return weighted_kappa(y_true, y_pred, k, KappaWeights::quadratic);
}

struct AucResult {
  std::optional<double> value;
  std::string note;  // skipped classes or failure reason
};

/// Macro one-vs-rest AUC via the Mann-Whitney rank statistic (ties count
/// half). Classes absent from y_true are skipped and noted; a single-class
/// y_true makes the metric undefined.
AucResult ovr_auc(const std::vector<int>& y_true, const std::vector<std::vector<double>>& probs);

// ---- dataset-level evaluation ----

struct SegLesionScore {
  double dice = 0.0;
  double iou = 0.0;
  size_t cases = 0;
};

struct EvalReport {
  // segmentation
  std::map<Lesion, SegLesionScore> per_lesion;
  double m_dice = 0.0;
  double m_iou = 0.0;
  // classification
  double kappa = 0.0;
  std::optional<double> auc;
  std::string auc_note;
  std::optional<ConfusionMatrix> confusion;

  std::string to_table(const std::string& task) const;
  void write_keyvalue(const std::string& path, const std::string& task) const;
};

/// mDice / mIoU as the arithmetic mean over evaluated lesions.
EvalReport aggregate_seg(const std::map<Lesion, SegLesionScore>& per_lesion);

/// Compare predicted masks under pred_dir/<lesion>/<stem>.png to the
/// manifest's ground-truth masks. Every annotated case must have a prediction.
EvalReport evaluate_seg(const std::string& pred_dir, const SegManifest& gt);

/// Score a predictions.csv (header case,class,P0,...) against labels.
EvalReport evaluate_cls(const std::string& pred_csv, const ClsManifest& gt,
                        KappaWeights weights = KappaWeights::quadratic);

}  // namespace octa
