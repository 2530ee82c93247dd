#include "octa/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace octa {

Task task_from_name(const std::string& name) {
  if (name == "segmentation" || name == "seg") return Task::segmentation;
  if (name == "classification" || name == "cls") return Task::classification;
  throw std::invalid_argument("unknown task: " + name);
}

const char* task_name(Task t) {
  return t == Task::segmentation ? "segmentation" : "classification";
}

namespace {

using nn::Tensor;

/// Two-level encoder-decoder with one skip connection; enough capacity to
/// overfit the synthetic blobs at desk scale.
class TinyUnet : public Model {
 public:
  TinyUnet(ModelSpec spec, uint64_t seed)
      : Model(std::move(spec)),
        rng_(seed, "init"),
        enc1_("enc1.conv", 1, 8, 3, rng_),
        enc2_("enc2.conv", 8, 16, 3, rng_),
        dec1_("dec1.conv", 24, 8, 3, rng_),
        head_("head.conv", 8, spec_.num_outputs, 1, rng_) {
    if (spec_.input_size % 2 != 0) throw std::invalid_argument("tiny_unet input size must be even");
  }

  Tensor forward_logits(const Tensor& x) override {
    Tensor e1 = relu1_.forward(enc1_.forward(x));
    skip_ = e1;
    Tensor e2 = relu2_.forward(enc2_.forward(pool_.forward(e1)));
    Tensor up = up_.forward(e2);
    Tensor cat(24, up.h, up.w);
    std::copy(skip_.v.begin(), skip_.v.end(), cat.v.begin());
    std::copy(up.v.begin(), up.v.end(), cat.v.begin() + skip_.v.size());
    Tensor d1 = relu3_.forward(dec1_.forward(cat));
    return head_.forward(d1);
  }

  void backward(const Tensor& dlogits) override {
    Tensor d = dec1_.backward(relu3_.backward(head_.backward(dlogits)));
    // split the concat gradient back into skip and upsample branches
    Tensor dskip(8, d.h, d.w), dup(16, d.h, d.w);
    std::copy(d.v.begin(), d.v.begin() + dskip.v.size(), dskip.v.begin());
    std::copy(d.v.begin() + dskip.v.size(), d.v.end(), dup.v.begin());
    Tensor de1 = pool_.backward(enc2_.backward(relu2_.backward(up_.backward(dup))));
    for (size_t i = 0; i < de1.v.size(); ++i) de1.v[i] += dskip.v[i];
    enc1_.backward(relu1_.backward(de1));
  }

  std::vector<nn::Param*> params() override {
    std::vector<nn::Param*> out;
    for (auto* p : enc1_.params()) out.push_back(p);
    for (auto* p : enc2_.params()) out.push_back(p);
    for (auto* p : dec1_.params()) out.push_back(p);
    for (auto* p : head_.params()) out.push_back(p);
    return out;
  }

  void reinit_head(Rng& rng) override {
    for (auto* p : head_.params()) {
      double stddev = std::sqrt(2.0 / 8.0);
      for (float& v : p->w)
        v = p->name.ends_with(".b") ? 0.0f : static_cast<float>(rng.normal(0.0, stddev));
    }
  }

 private:
  Rng rng_;
  nn::Conv2d enc1_, enc2_, dec1_, head_;
  nn::ReLU relu1_, relu2_, relu3_;
  nn::MaxPool2 pool_;
  nn::UpsampleNearest2 up_;
  Tensor skip_;
};

/// Average-pool stem plus a two-layer MLP; the synthetic class markers make
/// this linearly separable, so it trains to a clean Kappa in seconds.
class TinyCnn : public Model {
 public:
  TinyCnn(ModelSpec spec, uint64_t seed)
      : Model(std::move(spec)),
        rng_(seed, "init"),
        pool_(pool_factor(spec_.input_size)),
        fc1_("stem.fc1", 16 * 16, 32, rng_),
        head_("head.fc", 32, spec_.num_outputs, rng_) {}

  Tensor forward_logits(const Tensor& x) override {
    Tensor pooled = pool_.forward(x);
    pooled_shape_ = {pooled.c, pooled.h, pooled.w};
    std::vector<float> flat = pooled.v;
    std::vector<float> h = relu_.forward(fc1_.forward(flat));
    std::vector<float> logits = head_.forward(h);
    Tensor out(spec_.num_outputs, 1, 1);
    out.v = logits;
    return out;
  }

  void backward(const Tensor& dlogits) override {
    std::vector<float> d = fc1_.backward(relu_.backward(head_.backward(dlogits.v)));
    Tensor dpool(pooled_shape_[0], pooled_shape_[1], pooled_shape_[2]);
    dpool.v = d;
    pool_.backward(dpool);
  }

  std::vector<nn::Param*> params() override {
    std::vector<nn::Param*> out;
    for (auto* p : fc1_.params()) out.push_back(p);
    for (auto* p : head_.params()) out.push_back(p);
    return out;
  }

  void reinit_head(Rng& rng) override { head_.reinit(rng); }

 private:
  static int pool_factor(int input_size) {
    if (input_size % 16 != 0)
      throw std::invalid_argument("tiny_cnn input size must be a multiple of 16");
    return input_size / 16;
  }

  Rng rng_;
  nn::AvgPool pool_;
  nn::Dense fc1_, head_;
  nn::ReLU relu_;
  std::array<int, 3> pooled_shape_ = {0, 0, 0};
};

}  // namespace

const std::vector<ArchInfo>& registered_archs() {
  static const std::vector<ArchInfo> archs = {
      {"tiny_unet", Task::segmentation, true},
      {"tiny_cnn", Task::classification, true},
      {"unet", Task::segmentation, false},
      {"unetpp", Task::segmentation, false},
      {"inception_v3", Task::classification, false},
      {"inception_res_v2", Task::classification, false},
      {"efficientnet_b6", Task::classification, false},
      {"se_resnext101", Task::classification, false},
      {"resnest50", Task::classification, false},
      {"vit_t", Task::classification, false},
      {"vit_s", Task::classification, false},
  };
  return archs;
}

std::unique_ptr<Model> build_model(const ModelSpec& spec, uint64_t seed) {
  const ArchInfo* info = nullptr;
  for (const auto& a : registered_archs())
    if (a.key == spec.arch) info = &a;
  if (!info) {
    std::ostringstream os;
    os << "unknown arch '" << spec.arch << "'; registered:";
    for (const auto& a : registered_archs()) os << " " << a.key;
    throw std::invalid_argument(os.str());
  }
  if (!info->native)
    throw std::runtime_error("arch '" + spec.arch +
                             "' is consumed through an external backbone provider and is not "
                             "buildable in this binary; use tiny_unet or tiny_cnn for local runs");
  if (info->task != spec.task)
    throw std::invalid_argument("arch '" + spec.arch + "' does not support task " +
                                task_name(spec.task));
  if (spec.num_outputs < 1) throw std::invalid_argument("num_outputs must be >= 1");

  if (spec.arch == "tiny_unet") return std::make_unique<TinyUnet>(spec, seed);
  return std::make_unique<TinyCnn>(spec, seed);
}

nn::Tensor to_tensor(const ImageArray& img) {
  nn::Tensor t(img.c, img.h, img.w);
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) t.at(ch, y, x) = img.at(y, x, ch);
  return t;
}

ImageArray to_image(const nn::Tensor& t) {
  ImageArray img(t.h, t.w, t.c);
  for (int ch = 0; ch < t.c; ++ch)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) img.at(y, x, ch) = t.at(ch, y, x);
  return img;
}

ImageArray to_gray(const ImageArray& img) {
  if (img.c == 1) return img;
  ImageArray out(img.h, img.w, 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float acc = 0.0f;
      for (int ch = 0; ch < img.c; ++ch) acc += img.at(y, x, ch);
      out.at(y, x) = acc / img.c;
    }
  return out;
}

namespace {

nn::Tensor model_input(const Model& model, const ImageArray& img) {
  ImageArray gray = to_gray(img);
  int s = model.spec().input_size;
  if (gray.h != s || gray.w != s) gray = resize_nearest(gray, s, s);
  return to_tensor(gray);
}

}  // namespace

std::vector<double> predict_probs(Model& model, const ImageArray& img) {
  nn::Tensor logits = model.forward_logits(model_input(model, img));
  return nn::softmax(logits.v);
}

ImageArray predict_probmap(Model& model, const ImageArray& img) {
  nn::Tensor logits = model.forward_logits(model_input(model, img));
  for (float& v : logits.v) v = nn::sigmoidf(v);
  ImageArray prob = to_image(logits);
  if (prob.h != img.h || prob.w != img.w) prob = resize_nearest(prob, img.h, img.w);
  return prob;
}

}  // namespace octa
