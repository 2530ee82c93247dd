#pragma once

#include <vector>

#include "octa/image.hpp"
#include "octa/rng.hpp"

namespace octa {

// ---- deterministic spatial primitives ----

ImageArray hflip(const ImageArray& img);
ImageArray vflip(const ImageArray& img);
/// Rotate counter-clockwise by a multiple of 90 degrees (0, 90, 180, 270).
ImageArray rotate90(const ImageArray& img, int quarter_turns);
/// Scale all pixel values by `factor`, clamped to [0,1].
ImageArray adjust_brightness(const ImageArray& img, float factor);

// ---- randomized augmentation ----

/// Photometric jitter: brightness/contrast scaling plus gaussian noise, all
/// magnitudes proportional to `strength` in [0,1]. strength 0 is the exact
/// identity. Output clamped to [0,1]; shape preserved.
ImageArray photometric_jitter(const ImageArray& img, double strength, Rng& rng);

struct GeomOps {
  bool hflip = true;
  bool rotate = true;
  bool random_crop = true;
  bool perspective = true;
};

/// Apply one random spatial transform draw to an image and, when given, the
/// identical transform to its mask. Mask resampling is nearest-neighbor so
/// binary masks stay binary.
std::pair<ImageArray, ImageArray> geometric_augment(const ImageArray& img,
                                                    const ImageArray* mask,
                                                    const GeomOps& ops, Rng& rng);

// ---- hybrid MixUp / CutMix ----

struct MixConfig {
  double alpha1 = 0.4;       // MixUp Beta(alpha1, alpha1)
  double alpha2 = 1.0;       // CutMix Beta(alpha2, alpha2)
  double mix_prob = 0.5;     // probability a batch is mixed at all
  double cutmix_share = 0.5; // P(CutMix | mixed)
};

enum class MixMode { none, mixup, cutmix };
const char* mix_mode_name(MixMode m);

/// lambda ~ Beta(alpha, alpha).
double sample_lambda(double alpha, Rng& rng);

/// Pixelwise and labelwise convex combination with weight lambda on (xi, yi).
std::pair<ImageArray, std::vector<double>> mixup_pair(const ImageArray& xi,
                                                      const std::vector<double>& yi,
                                                      const ImageArray& xj,
                                                      const std::vector<double>& yj,
                                                      double lambda);

/// CutMix bounding box: center uniform over the image, size W*sqrt(1-lambda)
/// by H*sqrt(1-lambda), then clipped to integer pixel bounds.
struct BBox {
  double rx = 0, ry = 0;  // center, pixels
  double rw = 0, rh = 0;  // width / height before clipping
  int x0 = 0, x1 = 0;     // clipped column range [x0, x1)
  int y0 = 0, y1 = 0;     // clipped row range [y0, y1)

  long long clipped_area() const {
    return static_cast<long long>(x1 - x0) * (y1 - y0);
  }
};

BBox cutmix_box(int w, int h, double lambda, Rng& rng);

struct CutmixResult {
  ImageArray image;
  std::vector<double> label;
  double lambda_adj = 1.0;       // recomputed from the clipped area
  long long pixels_from_first = 0;
  BBox box;
};

/// Paste the box region of xj into xi; label weight is the exact fraction of
/// pixels kept from xi after clipping.
CutmixResult cutmix_pair(const ImageArray& xi, const std::vector<double>& yi,
                         const ImageArray& xj, const std::vector<double>& yj,
                         double lambda, Rng& rng);

struct MixedBatch {
  std::vector<ImageArray> images;
  std::vector<std::vector<double>> soft_labels;
  double lambda_used = 1.0;
  MixMode mode = MixMode::none;
  bool warning_batch_too_small = false;
};

/// Hybrid strategy: with probability mix_prob the whole batch is mixed, by
/// CutMix with probability cutmix_share and MixUp otherwise; one lambda per
/// batch; partners drawn as a uniform random permutation of the batch.
MixedBatch hybrid_mix(const std::vector<ImageArray>& images,
                      const std::vector<std::vector<double>>& labels_onehot,
                      const MixConfig& cfg, Rng& rng);

// ---- test-time augmentation ----

inline constexpr int kTtaMax = 8;

/// Deterministic TTA list: identity, hflip, vflip, rot180, rot90, rot270,
/// hflip.rot90, hflip.rot270 — truncated to t. Element 0 is always identity.
std::vector<ImageArray> tta_expand(const ImageArray& img, int t);

/// Apply TTA transform `index` (0-based, same order as tta_expand).
ImageArray tta_apply(const ImageArray& img, int index);
/// Undo TTA transform `index`; tta_invert(tta_apply(x, i), i) == x.
ImageArray tta_invert(const ImageArray& img, int index);

}  // namespace octa
