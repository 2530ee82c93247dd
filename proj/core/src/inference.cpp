#include "octa/inference.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "octa/augment.hpp"

namespace fs = std::filesystem;

namespace octa {

Ensemble::Ensemble(const EnsembleSpec& spec) {
  if (spec.members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  if (!spec.weights.empty() && spec.weights.size() != spec.members.size())
    throw std::invalid_argument("ensemble weight count mismatch");

  for (const auto& m : spec.members) models_.push_back(load_checkpoint(m));
  for (size_t i = 1; i < models_.size(); ++i) {
    if (models_[i]->spec().task != models_[0]->spec().task)
      throw std::invalid_argument("ensemble members disagree on task");
    if (models_[i]->spec().num_outputs != models_[0]->spec().num_outputs)
      throw std::invalid_argument("ensemble members disagree on output count");
  }

  weights_ = spec.weights.empty() ? std::vector<double>(models_.size(), 1.0) : spec.weights;
  double sum = 0.0;
  for (double w : weights_) {
    if (w < 0) throw std::invalid_argument("negative ensemble weight");
    sum += w;
  }
  if (sum <= 0) throw std::invalid_argument("ensemble weights sum to zero");
  for (double& w : weights_) w /= sum;
}

namespace {

/// Reduce per-member weighted contributions elementwise, summing each
/// element's terms in sorted order so the result is exactly invariant under
/// member permutation.
template <typename T>
void sorted_reduce(const std::vector<std::vector<T>>& contributions, std::vector<T>& out) {
  size_t n = contributions[0].size();
  out.assign(n, T(0));
  std::vector<T> terms(contributions.size());
  for (size_t i = 0; i < n; ++i) {
    for (size_t m = 0; m < contributions.size(); ++m) terms[m] = contributions[m][i];
    std::sort(terms.begin(), terms.end());
    T acc = T(0);
    for (T t : terms) acc += t;
    out[i] = acc;
  }
}

}  // namespace

Prediction predict_cls(Ensemble& ensemble, const ImageArray& img, int tta_t) {
  auto views = tta_expand(img, tta_t);
  std::vector<std::vector<double>> contributions(ensemble.size());
  for (size_t m = 0; m < ensemble.size(); ++m) {
    std::vector<double>& member_probs = contributions[m];
    for (const auto& view : views) {
      std::vector<double> p = predict_probs(ensemble.member(m), view);
      if (member_probs.empty()) member_probs.assign(p.size(), 0.0);
      for (size_t i = 0; i < p.size(); ++i) member_probs[i] += p[i] / views.size();
    }
    for (double& v : member_probs) v *= ensemble.weights()[m];
  }
  Prediction out;
  sorted_reduce(contributions, out.probs);
  out.cls = static_cast<int>(std::max_element(out.probs.begin(), out.probs.end()) -
                             out.probs.begin());
  return out;
}

Prediction predict_seg(Ensemble& ensemble, const ImageArray& img, double threshold, int tta_t) {
  std::vector<std::vector<float>> contributions(ensemble.size());
  for (size_t m = 0; m < ensemble.size(); ++m) {
    std::vector<float>& member_map = contributions[m];
    member_map.assign(static_cast<size_t>(img.h) * img.w, 0.0f);
    for (int t = 0; t < tta_t; ++t) {
      ImageArray pred = predict_probmap(ensemble.member(m), tta_apply(img, t));
      pred = tta_invert(pred, t);
      for (size_t i = 0; i < member_map.size(); ++i)
        member_map[i] += pred.data[i] / static_cast<float>(tta_t);
    }
    float w = static_cast<float>(ensemble.weights()[m]);
    for (float& v : member_map) v *= w;
  }
  Prediction out;
  out.prob_map = ImageArray(img.h, img.w, 1, 0.0f);
  sorted_reduce(contributions, out.prob_map.data);
  out.mask = binarize(out.prob_map, static_cast<float>(threshold));
  return out;
}

size_t predict_dataset(Ensemble& ensemble, const std::vector<std::string>& image_paths,
                       const std::string& out_dir, Task task, int tta_t, double threshold,
                       Lesion lesion) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  try {
    if (task == Task::classification) {
      fs::path csv_path = fs::path(out_dir) / "predictions.csv";
      std::ofstream csv(csv_path);
      if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
      written.push_back(csv_path);

      int k = ensemble.member(0).spec().num_outputs;
      csv << "case,class";
      for (int i = 0; i < k; ++i) csv << ",P" << i;
      csv << "\n";
      csv.setf(std::ios::fixed);
      csv.precision(6);
      for (const auto& path : image_paths) {
        Prediction p = predict_cls(ensemble, read_png(path), tta_t);
        csv << fs::path(path).filename().string() << "," << p.cls;
        for (double v : p.probs) csv << "," << v;
        csv << "\n";
      }
      return image_paths.size();
    }

    fs::path mask_dir = fs::path(out_dir) / lesion_name(lesion);
    fs::create_directories(mask_dir);
    for (const auto& path : image_paths) {
      Prediction p = predict_seg(ensemble, read_png(path), threshold, tta_t);
      fs::path out_path = mask_dir / fs::path(path).filename();
      write_mask_png(out_path.string(), p.mask);
      written.push_back(out_path);
    }
    return image_paths.size();
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

}  // namespace octa
