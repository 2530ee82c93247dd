#include "octa/image.hpp"

#include <algorithm>

namespace octa {

void clamp01(ImageArray& img) {
  for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

ImageArray binarize(const ImageArray& img, float threshold) {
  ImageArray out(img.h, img.w, img.c);
  for (size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = img.data[i] >= threshold ? 1.0f : 0.0f;
  return out;
}

ImageArray resize_nearest(const ImageArray& img, int new_h, int new_w) {
  ImageArray out(new_h, new_w, img.c);
  for (int y = 0; y < new_h; ++y) {
    int sy = std::min(img.h - 1, static_cast<int>(static_cast<int64_t>(y) * img.h / new_h));
    for (int x = 0; x < new_w; ++x) {
      int sx = std::min(img.w - 1, static_cast<int>(static_cast<int64_t>(x) * img.w / new_w));
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
    }
  }
  return out;
}

}  // namespace octa
