#include "octa/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "octa/image.hpp"
#include "octa/rng.hpp"

namespace fs = std::filesystem;

namespace octa {

const std::string& lesion_name(Lesion l) {
  static const std::array<std::string, 3> names = {"IRMA", "NPA", "NV"};
  return names[static_cast<size_t>(l)];
}

Lesion lesion_from_name(const std::string& name) {
  for (Lesion l : kAllLesions)
    if (lesion_name(l) == name) return l;
  throw std::invalid_argument("unknown lesion id: " + name + " (expected IRMA, NPA or NV)");
}

std::vector<size_t> SegManifest::annotated_for(Lesion l) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].mask_paths.count(l)) out.push_back(i);
  return out;
}

std::vector<size_t> FoldAssignment::indices_in(int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<size_t> FoldAssignment::indices_not_in(int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  return fields;
}

}  // namespace

SegManifest load_seg_manifest(const std::string& root) {
  fs::path images_dir = fs::path(root) / "images";
  auto images = sorted_pngs(images_dir);
  if (images.empty()) throw std::runtime_error("empty dataset: no images under " + images_dir.string());

  SegManifest m;
  m.root = root;
  for (const auto& img_path : images) {
    ImageArray img = read_png(img_path.string());  // validates readability
    SegEntry entry;
    entry.image_path = img_path.string();
    for (Lesion l : kAllLesions) {
      fs::path mask_path = fs::path(root) / "masks" / lesion_name(l) / img_path.filename();
      if (fs::exists(mask_path)) {
        ImageArray mask = read_png(mask_path.string());
        if (mask.h != img.h || mask.w != img.w)
          throw std::runtime_error("mask dimensions mismatch image: " + mask_path.string());
        entry.mask_paths[l] = mask_path.string();
      }
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

ClsManifest load_cls_manifest(const std::string& root) {
  fs::path csv_path = fs::path(root) / "labels.csv";
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());

  ClsManifest m;
  m.root = root;
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"image", "label"})
    throw std::runtime_error("labels.csv must start with header 'image,label': " + csv_path.string());

  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw std::runtime_error("malformed labels.csv row: " + line);
    ClsEntry e;
    e.image_path = (fs::path(root) / "images" / fields[0]).string();
    if (!fs::exists(e.image_path))
      throw std::runtime_error("image listed in labels.csv does not exist: " + e.image_path);
    e.label = std::stoi(fields[1]);
    if (e.label < 0) throw std::runtime_error("negative label in labels.csv: " + line);
    max_label = std::max(max_label, e.label);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw std::runtime_error("empty dataset: no rows in " + csv_path.string());
  m.class_count = max_label + 1;
  return m;
}

FoldAssignment split_folds(size_t n, int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  if (n < static_cast<size_t>(k))
    throw std::invalid_argument("cannot split " + std::to_string(n) + " entries into " +
                                std::to_string(k) + " folds");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed, "folds");
  std::shuffle(order.begin(), order.end(), rng.engine());

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.resize(n);
  for (size_t i = 0; i < n; ++i) fa.fold_of[order[i]] = static_cast<int>(i % k);
  return fa;
}

FoldAssignment split_folds_stratified(const std::vector<int>& labels, int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  if (labels.size() < static_cast<size_t>(k))
    throw std::invalid_argument("cannot split " + std::to_string(labels.size()) +
                                " entries into " + std::to_string(k) + " folds");
  int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(max_label) + 1);
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(seed, "folds");
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.resize(labels.size());
  // Deal each class round-robin with a continuing cursor so total fold sizes
  // stay balanced even when class counts are not multiples of k.
  size_t cursor = 0;
  for (auto& group : by_class) {
    std::shuffle(group.begin(), group.end(), rng.engine());
    for (size_t idx : group) fa.fold_of[idx] = static_cast<int>(cursor++ % k);
  }
  return fa;
}

void write_folds_csv(const std::string& path, const ClsManifest& manifest,
                     const FoldAssignment& folds) {
  if (manifest.entries.size() != folds.fold_of.size())
    throw std::invalid_argument("fold assignment size does not match manifest");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "image,fold\n";
  for (size_t i = 0; i < manifest.entries.size(); ++i)
    out << fs::path(manifest.entries[i].image_path).filename().string() << ","
        << folds.fold_of[i] << "\n";
}

FoldAssignment read_folds_csv(const std::string& path, const ClsManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"image", "fold"})
    throw std::runtime_error("folds.csv must start with header 'image,fold': " + path);

  std::map<std::string, int> fold_by_image;
  int max_fold = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw std::runtime_error("malformed folds.csv row: " + line);
    int f = std::stoi(fields[1]);
    if (!fold_by_image.emplace(fields[0], f).second)
      throw std::runtime_error("duplicated image in folds.csv: " + fields[0]);
    max_fold = std::max(max_fold, f);
  }

  FoldAssignment fa;
  fa.k = max_fold + 1;
  fa.fold_of.resize(manifest.entries.size());
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    auto name = fs::path(manifest.entries[i].image_path).filename().string();
    auto it = fold_by_image.find(name);
    if (it == fold_by_image.end())
      throw std::runtime_error("folds.csv has no entry for " + name);
    fa.fold_of[i] = it->second;
  }
  return fa;
}

namespace {

void fill_rect(ImageArray& img, int y0, int x0, int h, int w, float value) {
  for (int y = std::max(0, y0); y < std::min(img.h, y0 + h); ++y)
    for (int x = std::max(0, x0); x < std::min(img.w, x0 + w); ++x)
      for (int ch = 0; ch < img.c; ++ch) img.at(y, x, ch) = value;
}

}  // namespace

std::pair<SegManifest, ClsManifest> generate_synthetic(const SynthSpec& spec,
                                                       const std::string& out_root) {
  if (spec.n_samples < 1 || spec.image_size < 16 || spec.class_count < 2 ||
      spec.lesion_blob_count_min < 0 || spec.lesion_blob_count_max < spec.lesion_blob_count_min)
    throw std::invalid_argument("invalid synthetic dataset spec");

  fs::path root(out_root);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  for (Lesion l : kAllLesions) fs::create_directories(root / "masks" / lesion_name(l), ec);
  if (!fs::is_directory(root / "images"))
    throw std::runtime_error("cannot create output directory " + out_root);

  std::ofstream labels_csv(root / "labels.csv");
  if (!labels_csv) throw std::runtime_error("cannot write labels.csv under " + out_root);
  labels_csv << "image,label\n";

  Rng rng(spec.seed, "synth");
  const int size = spec.image_size;
  const int marker = std::max(4, size / 8);

  for (int i = 0; i < spec.n_samples; ++i) {
    int label = i % spec.class_count;

    ImageArray img(size, size, 1, 0.05f);

    // Class markers: a class-k image gets k+1 bright squares in the left
    // margin at fixed rows, so the label is recoverable from pixel values.
    int row_step = std::max(marker + 1, size / spec.class_count);
    for (int j = 0; j <= label; ++j) {
      int y0 = std::min(size - marker - 1, 2 + j * row_step);
      float intensity = 0.85f + 0.1f * static_cast<float>(rng.uniform());
      fill_rect(img, y0, 2, marker, marker, intensity);
    }

    // Lesion blobs: random rectangles kept to the right of the marker strip;
    // each lesion's mask is exactly its rendered blobs.
    std::array<ImageArray, 3> masks;
    for (Lesion l : kAllLesions) {
      ImageArray mask(size, size, 1, 0.0f);
      int count = rng.uniform_int(spec.lesion_blob_count_min, spec.lesion_blob_count_max);
      for (int b = 0; b < count; ++b) {
        int bh = rng.uniform_int(size / 16 + 1, size / 6 + 1);
        int bw = rng.uniform_int(size / 16 + 1, size / 6 + 1);
        int y0 = rng.uniform_int(0, size - bh - 1);
        int x0 = rng.uniform_int(size / 3, size - bw - 1);
        float intensity = 0.5f + 0.2f * static_cast<float>(rng.uniform());
        fill_rect(img, y0, x0, bh, bw, intensity);
        fill_rect(mask, y0, x0, bh, bw, 1.0f);
      }
      masks[static_cast<size_t>(l)] = std::move(mask);
    }

    if (spec.noise_level > 0.0)
      for (float& v : img.data) v += static_cast<float>(rng.normal(0.0, spec.noise_level));
    clamp01(img);

    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.png", i);
    write_png((root / "images" / name).string(), img);
    for (Lesion l : kAllLesions)
      write_mask_png((root / "masks" / lesion_name(l) / name).string(),
                     masks[static_cast<size_t>(l)]);
    labels_csv << name << "," << label << "\n";
  }
  labels_csv.close();

  return {load_seg_manifest(out_root), load_cls_manifest(out_root)};
}

}  // namespace octa
