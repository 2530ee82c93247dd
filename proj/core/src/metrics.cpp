#include "octa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace octa {

long long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0LL);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int k) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("label vector length mismatch");
  if (y_true.empty()) throw std::invalid_argument("empty label vectors");
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= k || y_pred[i] < 0 || y_pred[i] >= k)
      throw std::invalid_argument("label out of range [0," + std::to_string(k) + ")");
    ++cm.at(y_true[i], y_pred[i]);
  }
  return cm;
}

namespace {

struct MaskSums {
  long long inter = 0, pred = 0, gt = 0;
};

MaskSums mask_overlap(const ImageArray& pred, const ImageArray& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("mask shape mismatch");
  MaskSums s;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    bool p = pred.data[i] > 0.0f;
    bool g = gt.data[i] > 0.0f;
    s.inter += p && g;
    s.pred += p;
    s.gt += g;
  }
  return s;
}

}  // namespace

double hard_dice(const ImageArray& pred_mask, const ImageArray& gt_mask) {
  auto s = mask_overlap(pred_mask, gt_mask);
  if (s.pred + s.gt == 0) return 1.0;  // correctly predicted absent lesion
  return 2.0 * s.inter / static_cast<double>(s.pred + s.gt);
}

double hard_iou(const ImageArray& pred_mask, const ImageArray& gt_mask) {
  auto s = mask_overlap(pred_mask, gt_mask);
  long long uni = s.pred + s.gt - s.inter;
  if (uni == 0) return 1.0;
  return s.inter / static_cast<double>(uni);
}

double weighted_kappa(const std::vector<int>& y_true, const std::vector<int>& y_pred, int k,
                      KappaWeights weights) {
  ConfusionMatrix cm = confusion_matrix(y_true, y_pred, k);
  double total = static_cast<double>(cm.total());

  std::vector<double> row(k, 0.0), col(k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      row[i] += cm.at(i, j);
      col[j] += cm.at(i, j);
    }

  auto weight = [&](int i, int j) -> double {
    if (i == j) return 0.0;
    switch (weights) {
      case KappaWeights::quadratic: {
        double d = static_cast<double>(i - j) / (k - 1);
        return d * d;
      }
      case KappaWeights::linear:
        return std::abs(i - j) / static_cast<double>(k - 1);
      case KappaWeights::none:
        return 1.0;
    }
    return 0.0;
  };

  double num = 0.0, den = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double w = weight(i, j);
      num += w * cm.at(i, j);
      den += w * row[i] * col[j] / total;
    }
  if (num == 0.0 && den == 0.0) return 1.0;  // perfect agreement, degenerate marginals
  return 1.0 - num / den;
}

AucResult ovr_auc(const std::vector<int>& y_true, const std::vector<std::vector<double>>& probs) {
  if (y_true.empty() || y_true.size() != probs.size())
    throw std::invalid_argument("ovr_auc: bad inputs");
  const size_t n = y_true.size();
  const size_t k = probs[0].size();

  AucResult res;
  double sum = 0.0;
  int used = 0;
  for (size_t c = 0; c < k; ++c) {
    size_t pos = 0;
    for (int t : y_true) pos += (static_cast<size_t>(t) == c);
    if (pos == 0 || pos == n) {
      res.note += "class " + std::to_string(c) + " skipped (degenerate); ";
      continue;
    }
    // Mann-Whitney: rank positives among all scores, ties get average ranks.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return probs[a][c] < probs[b][c]; });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && probs[order[j + 1]][c] == probs[order[i]][c]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t m = i; m <= j; ++m) rank[order[m]] = avg;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (size_t m = 0; m < n; ++m)
      if (static_cast<size_t>(y_true[m]) == c) rank_sum += rank[m];
    double neg = static_cast<double>(n - pos);
    double auc = (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
    sum += auc;
    ++used;
  }
  if (used == 0) {
    res.note = "undefined: y_true contains a single class";
    return res;
  }
  res.value = sum / used;
  return res;
}

EvalReport aggregate_seg(const std::map<Lesion, SegLesionScore>& per_lesion) {
  if (per_lesion.empty()) throw std::invalid_argument("no lesions to aggregate");
  EvalReport r;
  r.per_lesion = per_lesion;
  for (const auto& [l, s] : per_lesion) {
    r.m_dice += s.dice;
    r.m_iou += s.iou;
  }
  r.m_dice /= static_cast<double>(per_lesion.size());
  r.m_iou /= static_cast<double>(per_lesion.size());
  return r;
}

EvalReport evaluate_seg(const std::string& pred_dir, const SegManifest& gt) {
  std::map<Lesion, SegLesionScore> per_lesion;
  bool any_lesion_dir = false;
  for (Lesion l : kAllLesions) {
    auto indices = gt.annotated_for(l);
    if (indices.empty()) continue;
    // A lesion without a prediction subdirectory was not part of this run;
    // within a present subdirectory every annotated case is required.
    if (!fs::is_directory(fs::path(pred_dir) / lesion_name(l))) continue;
    any_lesion_dir = true;
    SegLesionScore score;
    for (size_t idx : indices) {
      const auto& entry = gt.entries[idx];
      auto stem = fs::path(entry.image_path).filename();
      fs::path pred_path = fs::path(pred_dir) / lesion_name(l) / stem;
      if (!fs::exists(pred_path))
        throw std::runtime_error("missing prediction for case " + stem.string() + " (" +
                                 lesion_name(l) + ")");
      ImageArray pred = read_png(pred_path.string());
      ImageArray truth = read_png(entry.mask_paths.at(l));
      score.dice += hard_dice(pred, truth);
      score.iou += hard_iou(pred, truth);
      ++score.cases;
    }
    score.dice /= static_cast<double>(score.cases);
    score.iou /= static_cast<double>(score.cases);
    per_lesion[l] = score;
  }
  if (!any_lesion_dir)
    throw std::runtime_error("no per-lesion prediction directories under " + pred_dir);
  return aggregate_seg(per_lesion);
}

namespace {

std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

EvalReport evaluate_cls(const std::string& pred_csv, const ClsManifest& gt,
                        KappaWeights weights) {
  std::ifstream in(pred_csv);
  if (!in) throw std::runtime_error("cannot open " + pred_csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty predictions file " + pred_csv);
  auto header = split_comma(line);
  if (header.size() < 3 || header[0] != "case" || header[1] != "class")
    throw std::runtime_error("malformed predictions header in " + pred_csv);
  const size_t k = header.size() - 2;

  std::map<std::string, std::pair<int, std::vector<double>>> by_case;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_comma(line);
    if (f.size() != header.size()) throw std::runtime_error("malformed predictions row: " + line);
    std::vector<double> p(k);
    for (size_t i = 0; i < k; ++i) p[i] = std::stod(f[i + 2]);
    if (!by_case.emplace(f[0], std::make_pair(std::stoi(f[1]), std::move(p))).second)
      throw std::runtime_error("duplicated case id in predictions: " + f[0]);
  }

  std::vector<int> y_true, y_pred;
  std::vector<std::vector<double>> probs;
  for (const auto& entry : gt.entries) {
    auto name = fs::path(entry.image_path).filename().string();
    auto it = by_case.find(name);
    if (it == by_case.end()) throw std::runtime_error("missing prediction for case " + name);
    y_true.push_back(entry.label);
    y_pred.push_back(it->second.first);
    probs.push_back(it->second.second);
  }

  int classes = std::max(gt.class_count, static_cast<int>(k));
  EvalReport r;
  r.kappa = weighted_kappa(y_true, y_pred, classes, weights);
  auto auc = ovr_auc(y_true, probs);
  r.auc = auc.value;
  r.auc_note = auc.note;
  r.confusion = confusion_matrix(y_true, y_pred, classes);
  return r;
}

std::string EvalReport::to_table(const std::string& task) const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  if (task == "seg") {
    os << "Lesion  Dice    IoU     Cases\n";
    for (const auto& [l, s] : per_lesion)
      os << lesion_name(l) << (lesion_name(l).size() < 4 ? "   " : "  ") << "  " << s.dice
         << "  " << s.iou << "  " << s.cases << "\n";
    os << "mDice " << m_dice << "  mIoU " << m_iou << "\n";
  } else {
    os << "Kappa  " << kappa << "\n";
    if (auc)
      os << "AUC    " << *auc << "\n";
    else
      os << "AUC    n/a (" << auc_note << ")\n";
    if (confusion) {
      os << "Confusion (rows=truth):\n";
      for (int i = 0; i < confusion->k; ++i) {
        for (int j = 0; j < confusion->k; ++j) os << confusion->at(i, j) << "\t";
        os << "\n";
      }
    }
  }
  return os.str();
}

void EvalReport::write_keyvalue(const std::string& path, const std::string& task) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.setf(std::ios::fixed);
  out.precision(6);
  if (task == "seg") {
    for (const auto& [l, s] : per_lesion) {
      out << "dice_" << lesion_name(l) << " = " << s.dice << "\n";
      out << "iou_" << lesion_name(l) << " = " << s.iou << "\n";
    }
    out << "mdice = " << m_dice << "\nmiou = " << m_iou << "\n";
  } else {
    out << "kappa = " << kappa << "\n";
    if (auc) out << "auc = " << *auc << "\n";
    if (!auc_note.empty()) out << "auc_note = " << auc_note << "\n";
  }
}

}  // namespace octa
