#pragma once

#include <cstddef>
#include <vector>

namespace octa {

/// Flattened per-pixel probabilities or a probability vector over classes.
using Vec = std::vector<double>;

inline constexpr double kDiceEps = 1e-6;
inline constexpr double kLogClamp = 1e-12;

struct LossValue {
  double value = 0.0;
  size_t n = 0;  // contributing sample count
};

// ---- segmentation objectives ----

/// (2*sum(pred*gt) + eps) / (sum(pred) + sum(gt) + eps). Empty-vs-empty is 1.
double soft_dice_score(const Vec& pred, const Vec& gt, double eps = kDiceEps);
double soft_iou_score(const Vec& pred, const Vec& gt, double eps = kDiceEps);

LossValue dice_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts,
                    double eps = kDiceEps);
LossValue jaccard_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts,
                       double eps = kDiceEps);
LossValue joint_seg_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts,
                         double w_dice, double w_jaccard, double eps = kDiceEps);

/// d(1 - soft_dice_score)/dpred for one sample.
Vec dice_loss_grad(const Vec& pred, const Vec& gt, double eps = kDiceEps);
Vec jaccard_loss_grad(const Vec& pred, const Vec& gt, double eps = kDiceEps);

// ---- classification objectives ----

/// -sum(target * log(probs)), probs clamped at kLogClamp.
double cross_entropy(const Vec& probs, const Vec& target_onehot);
Vec cross_entropy_grad(const Vec& probs, const Vec& target_onehot);

/// y*(1-epsilon) + epsilon/K, applied componentwise; maps simplex to simplex.
Vec smooth_label(const Vec& y, double epsilon, int k);

/// Mean cross-entropy of predictions on mixed samples against their smoothed
/// mixed labels.
LossValue mix_loss(const std::vector<Vec>& probs_on_mixed,
                   const std::vector<Vec>& mixed_labels, double epsilon);

struct JointClsLoss {
  double total = 0.0;
  double clf = 0.0;  // plain cross-entropy on the raw batch
  double mix = 0.0;  // smoothed cross-entropy on the mixed batch
  size_t n = 0;
};

JointClsLoss joint_cls_loss(const std::vector<Vec>& probs_raw, const std::vector<Vec>& y_raw,
                            const std::vector<Vec>& probs_mixed, const std::vector<Vec>& y_mixed,
                            double epsilon);

}  // namespace octa
