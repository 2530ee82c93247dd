#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace octa {

/// H x W x C image with float values in [0,1], row-major, channel-interleaved.
struct ImageArray {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;

  ImageArray() = default;
  ImageArray(int h_, int w_, int c_, float fill = 0.0f)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

  float& at(int y, int x, int ch = 0) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch = 0) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const ImageArray& o) const {
    return h == o.h && w == o.w && c == o.c;
  }

  bool operator==(const ImageArray& o) const = default;
};

/// Clamp every value into [0,1] in place.
void clamp01(ImageArray& img);

/// Binarize: any value > 0.5 becomes 1, else 0.
ImageArray binarize(const ImageArray& img, float threshold = 0.5f);

/// Nearest-neighbor resize (works for masks; keeps binary masks binary).
ImageArray resize_nearest(const ImageArray& img, int new_h, int new_w);

// 8-bit PNG I/O. Grayscale files load as c=1, RGB as c=3; palette/alpha are
// rejected. Values map linearly to [0,1].
ImageArray read_png(const std::string& path);
void write_png(const std::string& path, const ImageArray& img);

/// Write a binary mask as an 8-bit {0,255} single-channel PNG.
void write_mask_png(const std::string& path, const ImageArray& mask);

}  // namespace octa
