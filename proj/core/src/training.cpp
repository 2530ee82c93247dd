#include "octa/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "octa/metrics.hpp"
#include "octa/objectives.hpp"

namespace fs = std::filesystem;

namespace octa {

LossChoice loss_from_name(const std::string& name) {
  if (name == "dice") return LossChoice::dice;
  if (name == "jaccard") return LossChoice::jaccard;
  if (name == "dice+jaccard" || name == "dice_jaccard") return LossChoice::dice_jaccard;
  throw std::invalid_argument("unknown loss: " + name);
}

const char* loss_name(LossChoice l) {
  switch (l) {
    case LossChoice::dice: return "dice";
    case LossChoice::jaccard: return "jaccard";
    case LossChoice::dice_jaccard: return "dice+jaccard";
  }
  return "?";
}

SelectionMetric selection_from_name(const std::string& name) {
  if (name == "dice") return SelectionMetric::dice;
  if (name == "iou") return SelectionMetric::iou;
  if (name == "kappa") return SelectionMetric::kappa;
  throw std::invalid_argument("unknown selection metric: " + name);
}

const char* selection_name(SelectionMetric m) {
  switch (m) {
    case SelectionMetric::dice: return "dice";
    case SelectionMetric::iou: return "iou";
    case SelectionMetric::kappa: return "kappa";
  }
  return "?";
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

const char* optimizer_name(OptimizerKind o) {
  return o == OptimizerKind::sgd ? "sgd" : "adam";
}

namespace {

std::unique_ptr<nn::Optimizer> make_optimizer(OptimizerKind kind, std::vector<nn::Param*> params) {
  if (kind == OptimizerKind::sgd) return std::make_unique<nn::Sgd>(std::move(params));
  return std::make_unique<nn::Adam>(std::move(params));
}

ImageArray load_for_model(const std::string& path, int input_size) {
  ImageArray img = to_gray(read_png(path));
  if (img.h != input_size || img.w != input_size)
    img = resize_nearest(img, input_size, input_size);
  return img;
}

Vec flatten_to_vec(const ImageArray& img) {
  Vec v(img.data.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = img.data[i];
  return v;
}

struct BestTracker {
  double best = -1.0;
  int best_epoch = -1;
  std::vector<std::vector<float>> best_weights;

  // strict improvement only, so ties keep the earliest epoch
  bool consider(double metric, int epoch, const std::vector<nn::Param*>& params) {
    if (metric <= best) return false;
    best = metric;
    best_epoch = epoch;
    best_weights.clear();
    for (nn::Param* p : params) best_weights.push_back(p->w);
    return true;
  }

  void restore(const std::vector<nn::Param*>& params) const {
    for (size_t i = 0; i < params.size(); ++i) params[i]->w = best_weights[i];
  }
};

void write_log_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,train_loss,val_metric,lr\n";
  out.precision(12);
  for (const auto& e : log.epochs)
    out << e.epoch << "," << e.train_loss << "," << e.val_metric << "," << e.lr << "\n";
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss))
    throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) +
                             "; aborting (check mix/smoothing settings and learning rate)");
}

}  // namespace

TrainResult train_segmentation(const RunConfig& cfg, const SegManifest& manifest, Lesion lesion) {
  auto annotated = manifest.annotated_for(lesion);
  if (annotated.size() < 2)
    throw std::runtime_error("need at least 2 images annotated for " + lesion_name(lesion));

  fs::create_directories(cfg.run_dir);

  // 80/20 train/val split
  Rng split_rng(cfg.seed, "seg-split");
  std::shuffle(annotated.begin(), annotated.end(), split_rng.engine());
  size_t n_val = std::max<size_t>(1, annotated.size() / 5);
  std::vector<size_t> val_idx(annotated.begin(), annotated.begin() + n_val);
  std::vector<size_t> train_idx(annotated.begin() + n_val, annotated.end());

  const int s = cfg.model.input_size;
  auto load_pair = [&](size_t idx) {
    const auto& e = manifest.entries[idx];
    ImageArray img = load_for_model(e.image_path, s);
    ImageArray mask = to_gray(read_png(e.mask_paths.at(lesion)));
    if (mask.h != s || mask.w != s) mask = resize_nearest(mask, s, s);
    for (float& v : mask.data) v = v > 0.0f ? 1.0f : 0.0f;
    return std::make_pair(std::move(img), std::move(mask));
  };
  std::vector<std::pair<ImageArray, ImageArray>> train_set, val_set;
  for (size_t i : train_idx) train_set.push_back(load_pair(i));
  for (size_t i : val_idx) val_set.push_back(load_pair(i));

  auto model = build_model(cfg.model, cfg.seed);
  if (!cfg.pretrained.empty()) adapt_pretrained(*model, cfg.pretrained, false, cfg.seed);
  auto optimizer = make_optimizer(cfg.optimizer, model->params());

  ScheduleSpec schedule = cfg.schedule;
  schedule.total_epochs = cfg.epochs;

  Rng order_rng(cfg.seed, "order");
  Rng aug_rng(cfg.seed, "augmentation");
  GeomOps geom_ops;

  auto t0 = std::chrono::steady_clock::now();
  TrainLog log;
  log.seed = cfg.seed;
  BestTracker best;

  double w_dice = cfg.loss != LossChoice::jaccard ? 1.0 : 0.0;
  double w_jacc = cfg.loss != LossChoice::dice ? 1.0 : 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = lr_at(schedule, epoch);

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng.engine());

    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t bsz = std::min<size_t>(cfg.batch_size, order.size() - start);
      optimizer->zero_grad();
      for (size_t b = 0; b < bsz; ++b) {
        auto [img, mask] = train_set[order[start + b]];
        if (cfg.geometric_aug) {
          auto [ai, am] = geometric_augment(img, &mask, geom_ops, aug_rng);
          img = std::move(ai);
          mask = std::move(am);
        }
        if (cfg.color_jitter) img = photometric_jitter(img, cfg.jitter_strength, aug_rng);

        nn::Tensor logits = model->forward_logits(to_tensor(img));
        Vec probs(logits.v.size()), gt = flatten_to_vec(mask);
        for (size_t i = 0; i < probs.size(); ++i) probs[i] = nn::sigmoidf(logits.v[i]);

        double sample_loss = 0.0;
        Vec dprob(probs.size(), 0.0);
        if (w_dice > 0) {
          sample_loss += w_dice * (1.0 - soft_dice_score(probs, gt));
          Vec g = dice_loss_grad(probs, gt);
          for (size_t i = 0; i < g.size(); ++i) dprob[i] += w_dice * g[i];
        }
        if (w_jacc > 0) {
          sample_loss += w_jacc * (1.0 - soft_iou_score(probs, gt));
          Vec g = jaccard_loss_grad(probs, gt);
          for (size_t i = 0; i < g.size(); ++i) dprob[i] += w_jacc * g[i];
        }
        epoch_loss += sample_loss;
        ++seen;

        nn::Tensor dlogits(logits.c, logits.h, logits.w);
        for (size_t i = 0; i < probs.size(); ++i)
          dlogits.v[i] = static_cast<float>(dprob[i] * probs[i] * (1.0 - probs[i]) / bsz);
        model->backward(dlogits);
      }
      optimizer->step(lr);
    }
    epoch_loss /= static_cast<double>(seen);
    check_finite(epoch_loss, epoch);

    // validation: resize only, never augmented
    double val_metric = 0.0;
    for (const auto& [img, mask] : val_set) {
      ImageArray prob = predict_probmap(*model, img);
      ImageArray pred = binarize(prob, 0.5f);
      val_metric += cfg.selection == SelectionMetric::iou ? hard_iou(pred, mask)
                                                          : hard_dice(pred, mask);
    }
    val_metric /= static_cast<double>(val_set.size());

    log.epochs.push_back({epoch, epoch_loss, val_metric, lr});
    best.consider(val_metric, epoch, model->params());
  }

  best.restore(model->params());
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  CheckpointRecord record;
  record.fold_id = -1;
  record.epoch = best.best_epoch;
  record.val_metric_name = selection_name(cfg.selection);
  record.val_metric_value = best.best;
  record.seed = cfg.seed;
  save_checkpoint((fs::path(cfg.run_dir) / "checkpoint.bin").string(),
                  (fs::path(cfg.run_dir) / "checkpoint.meta").string(), *model, record);
  log.best = record;
  write_log_csv((fs::path(cfg.run_dir) / "log.csv").string(), log);
  return {record, log};
}

TrainResult train_classifier(const RunConfig& cfg, const ClsManifest& manifest,
                             const FoldAssignment& folds, int fold_id) {
  if (folds.fold_of.size() != manifest.entries.size())
    throw std::invalid_argument("fold assignment does not match manifest");
  if (fold_id < 0 || fold_id >= folds.k) throw std::invalid_argument("fold id out of range");

  fs::create_directories(cfg.run_dir);

  auto train_idx = folds.indices_not_in(fold_id);
  auto val_idx = folds.indices_in(fold_id);

  const int k_classes = manifest.class_count;
  std::set<int> train_classes;
  for (size_t i : train_idx) train_classes.insert(manifest.entries[i].label);
  if (static_cast<int>(train_classes.size()) < k_classes)
    throw std::runtime_error(
        "training fold is missing a class; regenerate folds with a stratified split");

  const int s = cfg.model.input_size;
  std::vector<ImageArray> train_imgs, val_imgs;
  std::vector<int> train_labels, val_labels;
  for (size_t i : train_idx) {
    train_imgs.push_back(load_for_model(manifest.entries[i].image_path, s));
    train_labels.push_back(manifest.entries[i].label);
  }
  for (size_t i : val_idx) {
    val_imgs.push_back(load_for_model(manifest.entries[i].image_path, s));
    val_labels.push_back(manifest.entries[i].label);
  }

  auto model = build_model(cfg.model, cfg.seed + static_cast<uint64_t>(fold_id));
  if (!cfg.pretrained.empty()) adapt_pretrained(*model, cfg.pretrained, false, cfg.seed);
  auto optimizer = make_optimizer(cfg.optimizer, model->params());

  ScheduleSpec schedule = cfg.schedule;
  schedule.total_epochs = cfg.epochs;

  Rng order_rng(cfg.seed, "order-fold" + std::to_string(fold_id));
  Rng aug_rng(cfg.seed, "augmentation-fold" + std::to_string(fold_id));
  Rng mix_rng(cfg.seed, "mixing-fold" + std::to_string(fold_id));
  GeomOps geom_ops{.hflip = true, .rotate = true, .random_crop = false, .perspective = false};

  std::ofstream mix_log((fs::path(cfg.run_dir) / "mix_log.csv").string());
  mix_log << "epoch,batch,mode,lambda\n";
  mix_log.precision(12);

  auto onehot = [&](int label) {
    Vec y(k_classes, 0.0);
    y[label] = 1.0;
    return y;
  };

  auto t0 = std::chrono::steady_clock::now();
  TrainLog log;
  log.seed = cfg.seed;
  BestTracker best;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = lr_at(schedule, epoch);

    std::vector<size_t> order(train_imgs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng.engine());

    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t bsz = std::min<size_t>(cfg.batch_size, order.size() - start);

      std::vector<ImageArray> batch_imgs;
      std::vector<Vec> batch_onehots;
      for (size_t b = 0; b < bsz; ++b) {
        ImageArray img = train_imgs[order[start + b]];
        if (cfg.geometric_aug) img = geometric_augment(img, nullptr, geom_ops, aug_rng).first;
        if (cfg.color_jitter) img = photometric_jitter(img, cfg.jitter_strength, aug_rng);
        batch_imgs.push_back(std::move(img));
        batch_onehots.push_back(onehot(train_labels[order[start + b]]));
      }

      MixedBatch mixed = hybrid_mix(batch_imgs, batch_onehots, cfg.mix, mix_rng);
      mix_log << epoch << "," << batches << "," << mix_mode_name(mixed.mode) << ","
              << (mixed.mode == MixMode::none ? 1.0 : mixed.lambda_used) << "\n";

      optimizer->zero_grad();
      std::vector<Vec> probs_raw, probs_mixed;
      // raw branch: plain cross-entropy against one-hot targets
      for (size_t b = 0; b < bsz; ++b) {
        nn::Tensor logits = model->forward_logits(to_tensor(batch_imgs[b]));
        Vec p = nn::softmax(logits.v);
        probs_raw.push_back(p);
        nn::Tensor dlogits(logits.c, 1, 1);
        for (int c = 0; c < k_classes; ++c)
          dlogits.v[c] = static_cast<float>((p[c] - batch_onehots[b][c]) / bsz);
        model->backward(dlogits);
      }
      // mixed branch: cross-entropy against smoothed mixed labels
      for (size_t b = 0; b < bsz; ++b) {
        nn::Tensor logits = model->forward_logits(to_tensor(mixed.images[b]));
        Vec p = nn::softmax(logits.v);
        probs_mixed.push_back(p);
        Vec target = smooth_label(mixed.soft_labels[b], cfg.label_smoothing, k_classes);
        nn::Tensor dlogits(logits.c, 1, 1);
        for (int c = 0; c < k_classes; ++c)
          dlogits.v[c] = static_cast<float>((p[c] - target[c]) / bsz);
        model->backward(dlogits);
      }
      optimizer->step(lr);

      JointClsLoss jl = joint_cls_loss(probs_raw, batch_onehots, probs_mixed, mixed.soft_labels,
                                       cfg.label_smoothing);
      epoch_loss += jl.total;
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
    check_finite(epoch_loss, epoch);

    std::vector<int> val_pred;
    for (const auto& img : val_imgs) {
      Vec p = predict_probs(*model, img);
      val_pred.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    }
    double val_metric = weighted_kappa(val_labels, val_pred, k_classes);

    log.epochs.push_back({epoch, epoch_loss, val_metric, lr});
    best.consider(val_metric, epoch, model->params());
  }

  best.restore(model->params());
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  CheckpointRecord record;
  record.fold_id = fold_id;
  record.epoch = best.best_epoch;
  record.val_metric_name = "kappa";
  record.val_metric_value = best.best;
  record.seed = cfg.seed;
  save_checkpoint((fs::path(cfg.run_dir) / "checkpoint.bin").string(),
                  (fs::path(cfg.run_dir) / "checkpoint.meta").string(), *model, record);
  log.best = record;
  write_log_csv((fs::path(cfg.run_dir) / "log.csv").string(), log);
  return {record, log};
}

CvSummary run_cv(const RunConfig& cfg, const ClsManifest& manifest, const FoldAssignment& folds) {
  if (folds.k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  CvSummary summary;
  for (int fold = 0; fold < folds.k; ++fold) {
    RunConfig fold_cfg = cfg;
    fold_cfg.run_dir = (fs::path(cfg.run_dir) / ("fold" + std::to_string(fold))).string();
    summary.checkpoints.push_back(train_classifier(fold_cfg, manifest, folds, fold).checkpoint);
  }

  double mean = 0.0;
  for (const auto& c : summary.checkpoints) mean += c.val_metric_value;
  mean /= static_cast<double>(summary.checkpoints.size());
  double var = 0.0;
  for (const auto& c : summary.checkpoints) {
    double d = c.val_metric_value - mean;
    var += d * d;
  }
  var /= static_cast<double>(summary.checkpoints.size());
  summary.mean_val_metric = mean;
  summary.std_val_metric = std::sqrt(var);

  std::ofstream out((fs::path(cfg.run_dir) / "summary.txt").string());
  out.precision(6);
  out << "folds = " << folds.k << "\n"
      << "val_metric = kappa\n"
      << "mean = " << summary.mean_val_metric << "\n"
      << "std = " << summary.std_val_metric << "\n";
  return summary;
}

}  // namespace octa
