#include "octa/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace octa {

ImageArray hflip(const ImageArray& img) {
  ImageArray out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(y, img.w - 1 - x, ch);
  return out;
}

ImageArray vflip(const ImageArray& img) {
  ImageArray out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(img.h - 1 - y, x, ch);
  return out;
}

ImageArray rotate90(const ImageArray& img, int quarter_turns) {
  int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return img;
  ImageArray out(q == 2 ? img.h : img.w, q == 2 ? img.w : img.h, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      int ny, nx;
      if (q == 1) {  // CCW: (y,x) -> (W-1-x, y)
        ny = img.w - 1 - x;
        nx = y;
      } else if (q == 2) {
        ny = img.h - 1 - y;
        nx = img.w - 1 - x;
      } else {  // q == 3, CW
        ny = x;
        nx = img.h - 1 - y;
      }
      for (int ch = 0; ch < img.c; ++ch) out.at(ny, nx, ch) = img.at(y, x, ch);
    }
  return out;
}

ImageArray adjust_brightness(const ImageArray& img, float factor) {
  ImageArray out = img;
  for (float& v : out.data) v = std::min(1.0f, std::max(0.0f, v * factor));
  return out;
}

ImageArray photometric_jitter(const ImageArray& img, double strength, Rng& rng) {
  if (strength < 0.0 || strength > 1.0)
    throw std::invalid_argument("jitter strength must be in [0,1]");
  if (strength == 0.0) return img;

  float brightness = 1.0f + static_cast<float>(strength * (2.0 * rng.uniform() - 1.0) * 0.5);
  float contrast = 1.0f + static_cast<float>(strength * (2.0 * rng.uniform() - 1.0) * 0.5);
  double noise_sigma = 0.1 * strength;

  ImageArray out = img;
  for (float& v : out.data) {
    v = (v * brightness - 0.5f) * contrast + 0.5f;
    v += static_cast<float>(rng.normal(0.0, noise_sigma));
  }
  clamp01(out);
  return out;
}

namespace {

// Quad warp: output pixel (u,v) in [0,1]^2 samples the source at the bilinear
// blend of four jittered corners. Nearest-neighbor pickup keeps masks binary.
ImageArray quad_warp(const ImageArray& img, const std::array<std::pair<double, double>, 4>& corners) {
  ImageArray out(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y) {
    double v = img.h > 1 ? static_cast<double>(y) / (img.h - 1) : 0.0;
    for (int x = 0; x < img.w; ++x) {
      double u = img.w > 1 ? static_cast<double>(x) / (img.w - 1) : 0.0;
      double sx = (1 - u) * (1 - v) * corners[0].first + u * (1 - v) * corners[1].first +
                  (1 - u) * v * corners[2].first + u * v * corners[3].first;
      double sy = (1 - u) * (1 - v) * corners[0].second + u * (1 - v) * corners[1].second +
                  (1 - u) * v * corners[2].second + u * v * corners[3].second;
      int ix = std::clamp(static_cast<int>(std::lround(sx)), 0, img.w - 1);
      int iy = std::clamp(static_cast<int>(std::lround(sy)), 0, img.h - 1);
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(iy, ix, ch);
    }
  }
  return out;
}

ImageArray crop_resize(const ImageArray& img, int y0, int x0, int ch_, int cw) {
  ImageArray crop(ch_, cw, img.c);
  for (int y = 0; y < ch_; ++y)
    for (int x = 0; x < cw; ++x)
      for (int ci = 0; ci < img.c; ++ci) crop.at(y, x, ci) = img.at(y0 + y, x0 + x, ci);
  return resize_nearest(crop, img.h, img.w);
}

}  // namespace

std::pair<ImageArray, ImageArray> geometric_augment(const ImageArray& img,
                                                    const ImageArray* mask,
                                                    const GeomOps& ops, Rng& rng) {
  if (mask && (mask->h != img.h || mask->w != img.w))
    throw std::invalid_argument("mask shape does not match image");

  ImageArray im = img;
  ImageArray mk = mask ? *mask : ImageArray();
  auto both = [&](auto&& fn) {
    im = fn(im);
    if (mask) mk = fn(mk);
  };

  if (ops.hflip && rng.bernoulli(0.5)) both([](const ImageArray& a) { return hflip(a); });

  if (ops.rotate) {
    int q = rng.uniform_int(0, 3);
    if (q != 0) both([q](const ImageArray& a) { return rotate90(a, q); });
  }

  if (ops.random_crop) {
    double scale = 0.8 + 0.2 * rng.uniform();
    int ch_ = std::max(1, static_cast<int>(std::lround(im.h * scale)));
    int cw = std::max(1, static_cast<int>(std::lround(im.w * scale)));
    int y0 = rng.uniform_int(0, im.h - ch_);
    int x0 = rng.uniform_int(0, im.w - cw);
    both([&](const ImageArray& a) { return crop_resize(a, y0, x0, ch_, cw); });
  }

  if (ops.perspective) {
    double mag = 0.05 * std::min(im.h, im.w);
    std::array<std::pair<double, double>, 4> corners = {{
        {rng.uniform(-mag, mag), rng.uniform(-mag, mag)},
        {im.w - 1 + rng.uniform(-mag, mag), rng.uniform(-mag, mag)},
        {rng.uniform(-mag, mag), im.h - 1 + rng.uniform(-mag, mag)},
        {im.w - 1 + rng.uniform(-mag, mag), im.h - 1 + rng.uniform(-mag, mag)},
    }};
    both([&](const ImageArray& a) { return quad_warp(a, corners); });
  }

  return {std::move(im), std::move(mk)};
}

const char* mix_mode_name(MixMode m) {
  switch (m) {
    case MixMode::none: return "none";
    case MixMode::mixup: return "mixup";
    case MixMode::cutmix: return "cutmix";
  }
  return "?";
}

double sample_lambda(double alpha, Rng& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("beta alpha must be > 0");
  double a = rng.gamma(alpha);
  double b = rng.gamma(alpha);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

std::pair<ImageArray, std::vector<double>> mixup_pair(const ImageArray& xi,
                                                      const std::vector<double>& yi,
                                                      const ImageArray& xj,
                                                      const std::vector<double>& yj,
                                                      double lambda) {
  if (!xi.same_shape(xj) || yi.size() != yj.size())
    throw std::invalid_argument("mixup_pair shape mismatch");
  ImageArray x(xi.h, xi.w, xi.c);
  float lf = static_cast<float>(lambda);
  for (size_t i = 0; i < x.data.size(); ++i)
    x.data[i] = lf * xi.data[i] + (1.0f - lf) * xj.data[i];
  std::vector<double> y(yi.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = lambda * yi[i] + (1.0 - lambda) * yj[i];
  return {std::move(x), std::move(y)};
}

BBox cutmix_box(int w, int h, double lambda, Rng& rng) {
  if (w < 1 || h < 1) throw std::invalid_argument("cutmix_box needs positive dimensions");
  BBox b;
  b.rx = rng.uniform(0.0, w);
  b.ry = rng.uniform(0.0, h);
  double side = std::sqrt(std::max(0.0, 1.0 - lambda));
  b.rw = w * side;
  b.rh = h * side;
  b.x0 = std::clamp(static_cast<int>(std::lround(b.rx - b.rw / 2)), 0, w);
  b.x1 = std::clamp(static_cast<int>(std::lround(b.rx + b.rw / 2)), b.x0, w);
  b.y0 = std::clamp(static_cast<int>(std::lround(b.ry - b.rh / 2)), 0, h);
  b.y1 = std::clamp(static_cast<int>(std::lround(b.ry + b.rh / 2)), b.y0, h);
  return b;
}

CutmixResult cutmix_pair(const ImageArray& xi, const std::vector<double>& yi,
                         const ImageArray& xj, const std::vector<double>& yj,
                         double lambda, Rng& rng) {
  if (!xi.same_shape(xj) || yi.size() != yj.size())
    throw std::invalid_argument("cutmix_pair shape mismatch");

  CutmixResult r;
  r.box = cutmix_box(xi.w, xi.h, lambda, rng);
  r.image = xi;
  for (int y = r.box.y0; y < r.box.y1; ++y)
    for (int x = r.box.x0; x < r.box.x1; ++x)
      for (int ch = 0; ch < xi.c; ++ch) r.image.at(y, x, ch) = xj.at(y, x, ch);

  long long total = static_cast<long long>(xi.w) * xi.h;
  r.pixels_from_first = total - r.box.clipped_area();
  r.lambda_adj = static_cast<double>(r.pixels_from_first) / static_cast<double>(total);

  r.label.resize(yi.size());
  for (size_t i = 0; i < yi.size(); ++i)
    r.label[i] = r.lambda_adj * yi[i] + (1.0 - r.lambda_adj) * yj[i];
  return r;
}

MixedBatch hybrid_mix(const std::vector<ImageArray>& images,
                      const std::vector<std::vector<double>>& labels_onehot,
                      const MixConfig& cfg, Rng& rng) {
  if (images.size() != labels_onehot.size())
    throw std::invalid_argument("hybrid_mix: image/label count mismatch");
  if (cfg.mix_prob < 0 || cfg.mix_prob > 1 || cfg.cutmix_share < 0 || cfg.cutmix_share > 1)
    throw std::invalid_argument("hybrid_mix: probabilities must be in [0,1]");

  MixedBatch out;
  out.images = images;
  out.soft_labels = labels_onehot;

  bool mix = rng.bernoulli(cfg.mix_prob);
  if (!mix) return out;
  if (images.size() < 2) {
    out.warning_batch_too_small = true;
    return out;
  }

  bool use_cutmix = rng.bernoulli(cfg.cutmix_share);
  out.mode = use_cutmix ? MixMode::cutmix : MixMode::mixup;
  out.lambda_used = sample_lambda(use_cutmix ? cfg.alpha2 : cfg.alpha1, rng);

  std::vector<size_t> partner(images.size());
  std::iota(partner.begin(), partner.end(), size_t{0});
  std::shuffle(partner.begin(), partner.end(), rng.engine());

  for (size_t i = 0; i < images.size(); ++i) {
    size_t j = partner[i];
    if (use_cutmix) {
      CutmixResult r = cutmix_pair(images[i], labels_onehot[i], images[j], labels_onehot[j],
                                   out.lambda_used, rng);
      out.images[i] = std::move(r.image);
      out.soft_labels[i] = std::move(r.label);
    } else {
      auto [x, y] = mixup_pair(images[i], labels_onehot[i], images[j], labels_onehot[j],
                               out.lambda_used);
      out.images[i] = std::move(x);
      out.soft_labels[i] = std::move(y);
    }
  }
  return out;
}

ImageArray tta_apply(const ImageArray& img, int index) {
  switch (index) {
    case 0: return img;
    case 1: return hflip(img);
    case 2: return vflip(img);
    case 3: return rotate90(img, 2);
    case 4: return rotate90(img, 1);
    case 5: return rotate90(img, 3);
    case 6: return hflip(rotate90(img, 1));
    case 7: return hflip(rotate90(img, 3));
    default: throw std::invalid_argument("tta index out of range [0,8)");
  }
}

ImageArray tta_invert(const ImageArray& img, int index) {
  switch (index) {
    case 0: return img;
    case 1: return hflip(img);
    case 2: return vflip(img);
    case 3: return rotate90(img, 2);
    case 4: return rotate90(img, 3);
    case 5: return rotate90(img, 1);
    case 6: return rotate90(hflip(img), 3);
    case 7: return rotate90(hflip(img), 1);
    default: throw std::invalid_argument("tta index out of range [0,8)");
  }
}

std::vector<ImageArray> tta_expand(const ImageArray& img, int t) {
  if (t < 1 || t > kTtaMax)
    throw std::invalid_argument("tta count must be in [1," + std::to_string(kTtaMax) + "]");
  std::vector<ImageArray> out;
  out.reserve(t);
  for (int i = 0; i < t; ++i) out.push_back(tta_apply(img, i));
  return out;
}

}  // namespace octa
