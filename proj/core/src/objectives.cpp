#include "octa/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octa {

namespace {

void check_same_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

struct OverlapSums {
  double inter = 0.0, sum_pred = 0.0, sum_gt = 0.0;
};

OverlapSums overlap(const Vec& pred, const Vec& gt) {
  OverlapSums s;
  for (size_t i = 0; i < pred.size(); ++i) {
    s.inter += pred[i] * gt[i];
    s.sum_pred += pred[i];
    s.sum_gt += gt[i];
  }
  return s;
}

LossValue mean_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts,
                    double (*score)(const Vec&, const Vec&, double), double eps) {
  if (preds.empty()) throw std::invalid_argument("empty batch");
  if (preds.size() != gts.size()) throw std::invalid_argument("pred/gt batch size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) total += 1.0 - score(preds[i], gts[i], eps);
  return {total / static_cast<double>(preds.size()), preds.size()};
}

}  // namespace

double soft_dice_score(const Vec& pred, const Vec& gt, double eps) {
  check_same_size(pred, gt, "soft_dice_score");
  auto s = overlap(pred, gt);
  return (2.0 * s.inter + eps) / (s.sum_pred + s.sum_gt + eps);
}

double soft_iou_score(const Vec& pred, const Vec& gt, double eps) {
  check_same_size(pred, gt, "soft_iou_score");
  auto s = overlap(pred, gt);
  // Half the smoothing constant of the dice score, so the algebraic identity
  // Dice = 2*IoU/(1+IoU) holds exactly even with smoothing.
  return (s.inter + eps / 2.0) / (s.sum_pred + s.sum_gt - s.inter + eps / 2.0);
}

LossValue dice_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts, double eps) {
  return mean_loss(preds, gts, soft_dice_score, eps);
}

LossValue jaccard_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts, double eps) {
  return mean_loss(preds, gts, soft_iou_score, eps);
}

LossValue joint_seg_loss(const std::vector<Vec>& preds, const std::vector<Vec>& gts,
                         double w_dice, double w_jaccard, double eps) {
  if (w_dice < 0 || w_jaccard < 0) throw std::invalid_argument("negative loss weight");
  if (w_dice == 0 && w_jaccard == 0) throw std::invalid_argument("both loss weights are zero");
  double v = 0.0;
  if (w_dice > 0) v += w_dice * dice_loss(preds, gts, eps).value;
  if (w_jaccard > 0) v += w_jaccard * jaccard_loss(preds, gts, eps).value;
  return {v, preds.size()};
}

Vec dice_loss_grad(const Vec& pred, const Vec& gt, double eps) {
  check_same_size(pred, gt, "dice_loss_grad");
  auto s = overlap(pred, gt);
  double num = 2.0 * s.inter + eps;
  double den = s.sum_pred + s.sum_gt + eps;
  Vec g(pred.size());
  for (size_t i = 0; i < pred.size(); ++i)
    g[i] = -(2.0 * gt[i]) / den + num / (den * den);
  return g;
}

Vec jaccard_loss_grad(const Vec& pred, const Vec& gt, double eps) {
  check_same_size(pred, gt, "jaccard_loss_grad");
  auto s = overlap(pred, gt);
  double num = s.inter + eps / 2.0;
  double den = s.sum_pred + s.sum_gt - s.inter + eps / 2.0;
  Vec g(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    // dI/dp = gt, dU/dp = 1 - gt
    g[i] = -(gt[i] * den - num * (1.0 - gt[i])) / (den * den);
  }
  return g;
}

double cross_entropy(const Vec& probs, const Vec& target_onehot) {
  check_same_size(probs, target_onehot, "cross_entropy");
  double v = 0.0;
  for (size_t i = 0; i < probs.size(); ++i)
    if (target_onehot[i] != 0.0) v -= target_onehot[i] * std::log(std::max(probs[i], kLogClamp));
  return v;
}

Vec cross_entropy_grad(const Vec& probs, const Vec& target_onehot) {
  check_same_size(probs, target_onehot, "cross_entropy_grad");
  Vec g(probs.size(), 0.0);
  for (size_t i = 0; i < probs.size(); ++i)
    if (target_onehot[i] != 0.0 && probs[i] > kLogClamp) g[i] = -target_onehot[i] / probs[i];
  return g;
}

Vec smooth_label(const Vec& y, double epsilon, int k) {
  if (epsilon < 0.0 || epsilon >= 1.0) throw std::invalid_argument("epsilon must be in [0,1)");
  if (k < 1 || y.size() != static_cast<size_t>(k))
    throw std::invalid_argument("smooth_label: class count mismatch");
  Vec out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] * (1.0 - epsilon) + epsilon / k;
  return out;
}

LossValue mix_loss(const std::vector<Vec>& probs_on_mixed,
                   const std::vector<Vec>& mixed_labels, double epsilon) {
  if (probs_on_mixed.empty()) throw std::invalid_argument("empty batch");
  if (probs_on_mixed.size() != mixed_labels.size())
    throw std::invalid_argument("mix_loss batch size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < probs_on_mixed.size(); ++i) {
    Vec smoothed = smooth_label(mixed_labels[i], epsilon,
                                static_cast<int>(mixed_labels[i].size()));
    total += cross_entropy(probs_on_mixed[i], smoothed);
  }
  return {total / static_cast<double>(probs_on_mixed.size()), probs_on_mixed.size()};
}

JointClsLoss joint_cls_loss(const std::vector<Vec>& probs_raw, const std::vector<Vec>& y_raw,
                            const std::vector<Vec>& probs_mixed, const std::vector<Vec>& y_mixed,
                            double epsilon) {
  if (probs_raw.empty() || probs_raw.size() != y_raw.size())
    throw std::invalid_argument("joint_cls_loss: bad raw batch");
  JointClsLoss out;
  out.n = probs_raw.size();
  double clf = 0.0;
  for (size_t i = 0; i < probs_raw.size(); ++i) clf += cross_entropy(probs_raw[i], y_raw[i]);
  out.clf = clf / static_cast<double>(probs_raw.size());
  out.mix = mix_loss(probs_mixed, y_mixed, epsilon).value;
  out.total = out.clf + out.mix;
  return out;
}

}  // namespace octa
