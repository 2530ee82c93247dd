#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "octa/data.hpp"
#include "octa/image.hpp"

namespace fs = std::filesystem;
using namespace octa;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_fold_partition(const FoldAssignment& f, size_t n) {
  REQUIRE(f.fold_of.size() == n);
  std::vector<size_t> sizes(f.k, 0);
  for (int fold : f.fold_of) {
    REQUIRE(fold >= 0);
    REQUIRE(fold < f.k);
    ++sizes[fold];
  }
  size_t mn = *std::min_element(sizes.begin(), sizes.end());
  size_t mx = *std::max_element(sizes.begin(), sizes.end());
  CHECK(mx - mn <= 1);
}

}  // namespace

TEST_CASE("lesion names") {
  CHECK(lesion_name(Lesion::IRMA) == "IRMA");
  CHECK(lesion_from_name("NPA") == Lesion::NPA);
  CHECK_THROWS_AS(lesion_from_name("FAZ"), std::invalid_argument);
}

TEST_CASE("split_folds partitions with near-equal sizes") {
  FoldAssignment f = split_folds(10, 5, 3);
  check_fold_partition(f, 10);
  // exact division: all folds size 2
  std::map<int, int> sizes;
  for (int fold : f.fold_of) ++sizes[fold];
  for (auto& [fold, n] : sizes) CHECK(n == 2);

  FoldAssignment big = split_folds(665, 5, 3);
  check_fold_partition(big, 665);
  std::map<int, int> big_sizes;
  for (int fold : big.fold_of) ++big_sizes[fold];
  for (auto& [fold, n] : big_sizes) CHECK(n == 133);

  // determinism
  CHECK(split_folds(100, 5, 7).fold_of == split_folds(100, 5, 7).fold_of);
  CHECK(split_folds(100, 5, 7).fold_of != split_folds(100, 5, 8).fold_of);

  CHECK_THROWS_AS(split_folds(3, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_folds(10, 1, 0), std::invalid_argument);
}

TEST_CASE("stratified split balances every class") {
  // labels [0 x6, 1 x4], k=2 -> each fold exactly 3 zeros and 2 ones
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
  for (uint64_t seed : {0ULL, 1ULL, 42ULL}) {
    FoldAssignment f = split_folds_stratified(labels, 2, seed);
    check_fold_partition(f, labels.size());
    std::map<std::pair<int, int>, int> count;  // (fold, class) -> n
    for (size_t i = 0; i < labels.size(); ++i) ++count[{f.fold_of[i], labels[i]}];
    CHECK(count[{0, 0}] == 3);
    CHECK(count[{1, 0}] == 3);
    CHECK(count[{0, 1}] == 2);
    CHECK(count[{1, 1}] == 2);
  }

  // larger random-ish case: per-class counts differ by at most 1 across folds
  std::vector<int> many;
  for (int i = 0; i < 50; ++i) many.push_back(0);
  for (int i = 0; i < 97; ++i) many.push_back(1);
  for (int i = 0; i < 18; ++i) many.push_back(2);
  FoldAssignment f = split_folds_stratified(many, 5, 11);
  check_fold_partition(f, many.size());
  for (int cls = 0; cls < 3; ++cls) {
    std::vector<int> per_fold(5, 0);
    for (size_t i = 0; i < many.size(); ++i)
      if (many[i] == cls) ++per_fold[f.fold_of[i]];
    int mn = *std::min_element(per_fold.begin(), per_fold.end());
    int mx = *std::max_element(per_fold.begin(), per_fold.end());
    CHECK(mx - mn <= 1);
  }
}

TEST_CASE("fold index helpers") {
  FoldAssignment f = split_folds(10, 5, 3);
  auto in0 = f.indices_in(0);
  auto out0 = f.indices_not_in(0);
  CHECK(in0.size() + out0.size() == 10);
  for (size_t i : in0) CHECK(f.fold_of[i] == 0);
  for (size_t i : out0) CHECK(f.fold_of[i] != 0);
}

TEST_CASE("synthetic generation is deterministic and labeled round-robin") {
  SynthSpec spec;
  spec.n_samples = 20;
  spec.image_size = 64;
  spec.class_count = 3;
  spec.seed = 7;

  fs::path a = fresh_dir("octa_synth_a");
  fs::path b = fresh_dir("octa_synth_b");
  auto [seg_a, cls_a] = generate_synthetic(spec, a.string());
  auto [seg_b, cls_b] = generate_synthetic(spec, b.string());

  CHECK(seg_a.entries.size() == 20);
  CHECK(cls_a.entries.size() == 20);
  CHECK(cls_a.class_count == 3);

  // byte-identical files across reruns with the same spec
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    fs::path rel = fs::relative(entry.path(), a);
    CHECK(read_bytes(entry.path()) == read_bytes(b / rel));
  }

  // label histogram of a 60-sample 3-class set is {20, 20, 20}
  SynthSpec spec60 = spec;
  spec60.n_samples = 60;
  fs::path c = fresh_dir("octa_synth_c");
  auto [seg_c, cls_c] = generate_synthetic(spec60, c.string());
  std::map<int, int> hist;
  for (const auto& e : cls_c.entries) ++hist[e.label];
  CHECK(hist[0] == 20);
  CHECK(hist[1] == 20);
  CHECK(hist[2] == 20);

  // blob range (0,0) -> every mask all-zero
  SynthSpec empty_spec = spec;
  empty_spec.lesion_blob_count_min = 0;
  empty_spec.lesion_blob_count_max = 0;
  fs::path d = fresh_dir("octa_synth_d");
  auto [seg_d, cls_d] = generate_synthetic(empty_spec, d.string());
  for (const auto& e : seg_d.entries)
    for (const auto& [lesion, path] : e.mask_paths) {
      ImageArray m = read_png(path);
      for (float v : m.data) CHECK(v == 0.0f);
    }

  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
  fs::remove_all(d);
}

TEST_CASE("manifest loading and validation") {
  fs::path dir = fresh_dir("octa_manifest");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks" / "IRMA");

  // empty dataset errors
  CHECK_THROWS_WITH_AS(load_seg_manifest(dir.string()), doctest::Contains("empty dataset"),
                       std::runtime_error);

  // 4 images, IRMA masks for 3
  for (int i = 0; i < 4; ++i) {
    ImageArray img(8, 8, 1, 0.3f);
    std::string name = "img" + std::to_string(i) + ".png";
    write_png((dir / "images" / name).string(), img);
    if (i < 3) write_mask_png((dir / "masks" / "IRMA" / name).string(), ImageArray(8, 8, 1));
  }
  SegManifest m = load_seg_manifest(dir.string());
  CHECK(m.entries.size() == 4);
  CHECK(m.annotated_for(Lesion::IRMA).size() == 3);
  CHECK(m.annotated_for(Lesion::NPA).empty());

  // mask dimension mismatch is a hard error
  write_mask_png((dir / "masks" / "IRMA" / "img3.png").string(), ImageArray(4, 4, 1));
  CHECK_THROWS(load_seg_manifest(dir.string()));
  fs::remove(dir / "masks" / "IRMA" / "img3.png");

  // classification manifest + folds round-trip
  {
    std::ofstream labels(dir / "labels.csv");
    labels << "image,label\nimg0.png,0\nimg1.png,1\nimg2.png,0\nimg3.png,1\n";
  }
  ClsManifest cls = load_cls_manifest(dir.string());
  CHECK(cls.entries.size() == 4);
  CHECK(cls.class_count == 2);

  std::vector<int> labels;
  for (const auto& e : cls.entries) labels.push_back(e.label);
  FoldAssignment folds = split_folds_stratified(labels, 2, 5);
  fs::path folds_csv = dir / "folds.csv";
  write_folds_csv(folds_csv.string(), cls, folds);
  FoldAssignment loaded = read_folds_csv(folds_csv.string(), cls);
  CHECK(loaded.k == folds.k);
  CHECK(loaded.fold_of == folds.fold_of);

  fs::remove_all(dir);
}

TEST_CASE("synthetic dataset scales to the paper-sized shape test") {
  SynthSpec spec;
  spec.n_samples = 109;
  spec.image_size = 32;
  spec.seed = 1;
  fs::path dir = fresh_dir("octa_synth_109");
  auto [seg, cls] = generate_synthetic(spec, dir.string());
  CHECK(seg.entries.size() == 109);
  SegManifest reloaded = load_seg_manifest(dir.string());
  CHECK(reloaded.entries.size() == 109);
  fs::remove_all(dir);
}
