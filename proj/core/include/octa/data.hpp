#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace octa {

enum class Lesion { IRMA, NPA, NV };
inline constexpr std::array<Lesion, 3> kAllLesions = {Lesion::IRMA, Lesion::NPA, Lesion::NV};

const std::string& lesion_name(Lesion l);
Lesion lesion_from_name(const std::string& name);

/// One segmentation case. A missing mask for a lesion means the image is not
/// annotated for that lesion, never that the lesion is absent.
struct SegEntry {
  std::string image_path;
  std::map<Lesion, std::string> mask_paths;
};

struct SegManifest {
  std::string root;
  std::vector<SegEntry> entries;

  std::vector<size_t> annotated_for(Lesion l) const;
};

struct ClsEntry {
  std::string image_path;
  int label = 0;
};

struct ClsManifest {
  std::string root;
  std::vector<ClsEntry> entries;
  int class_count = 0;
};

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // entry index -> fold id in [0,k)
  uint64_t seed = 0;

  std::vector<size_t> indices_in(int fold) const;
  std::vector<size_t> indices_not_in(int fold) const;
};

struct SynthSpec {
  int n_samples = 20;
  int image_size = 64;
  int class_count = 3;
  int lesion_blob_count_min = 1;
  int lesion_blob_count_max = 3;
  double noise_level = 0.05;
  uint64_t seed = 0;
};

// Directory layout: <root>/images/*.png, <root>/masks/{IRMA,NPA,NV}/*.png,
// <root>/labels.csv with header "image,label".

/// Scan a dataset root. Every image is decoded once to validate it; a mask
/// whose dimensions differ from its image is a hard error.
SegManifest load_seg_manifest(const std::string& root);

/// Read <root>/labels.csv and resolve image paths against <root>/images.
ClsManifest load_cls_manifest(const std::string& root);

/// Unstratified split: shuffled indices dealt round-robin over k folds.
FoldAssignment split_folds(size_t n, int k, uint64_t seed);

/// Stratified split: per-class proportions equal across folds within one
/// sample, total fold sizes still differ by at most one.
FoldAssignment split_folds_stratified(const std::vector<int>& labels, int k, uint64_t seed);

void write_folds_csv(const std::string& path, const ClsManifest& manifest,
                     const FoldAssignment& folds);
FoldAssignment read_folds_csv(const std::string& path, const ClsManifest& manifest);

/// Render a synthetic OCTA-like dataset under `out_root` and return manifests
/// for it. Classification labels follow a round-robin rule: sample i gets
/// class i % class_count, and a class-k image carries k+1 bright marker
/// squares at fixed positions, so labels are recoverable by construction.
/// Deterministic: the same spec yields byte-identical files.
std::pair<SegManifest, ClsManifest> generate_synthetic(const SynthSpec& spec,
                                                       const std::string& out_root);

}  // namespace octa
