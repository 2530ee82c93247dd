#pragma once

#include <string>
#include <vector>

#include "octa/rng.hpp"

namespace octa {
namespace nn {

/// Single-sample CHW tensor.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, float fill = 0.0f)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

  float& at(int ch, int y, int x) {
    return v[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  float at(int ch, int y, int x) const {
    return v[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  size_t size() const { return v.size(); }
};

/// Named parameter group with its gradient accumulator.
struct Param {
  std::string name;
  std::vector<float> w;
  std::vector<float> g;

  Param(std::string name_, size_t n) : name(std::move(name_)), w(n, 0.0f), g(n, 0.0f) {}
};

// ---- layers (single sample; gradients accumulate across backward calls) ----

class Conv2d {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, Rng& init);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);
  std::vector<Param*> params() { return {&weight_, &bias_}; }

 private:
  int in_ch_, out_ch_, k_, pad_;
  Param weight_, bias_;
  Tensor cache_x_;
};

class Dense {
 public:
  Dense(std::string name, int in_dim, int out_dim, Rng& init);

  std::vector<float> forward(const std::vector<float>& x);
  std::vector<float> backward(const std::vector<float>& dout);
  std::vector<Param*> params() { return {&weight_, &bias_}; }
  void reinit(Rng& init);

 private:
  int in_, out_;
  Param weight_, bias_;
  std::vector<float> cache_x_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);
  std::vector<float> forward(const std::vector<float>& x);
  std::vector<float> backward(const std::vector<float>& dout);

 private:
  std::vector<float> mask_;
};

class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

 private:
  int in_h_ = 0, in_w_ = 0, c_ = 0;
  std::vector<int> argmax_;
};

/// Average pooling with an arbitrary integer factor (used to shrink inputs).
class AvgPool {
 public:
  explicit AvgPool(int factor) : factor_(factor) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

 private:
  int factor_;
  int in_h_ = 0, in_w_ = 0, c_ = 0;
};

class UpsampleNearest2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);
};

// ---- activations applied at the output boundary ----

std::vector<double> softmax(const std::vector<float>& logits);
float sigmoidf(float x);

// ---- optimizers ----

class Optimizer {
 public:
  explicit Optimizer(std::vector<Param*> params) : params_(std::move(params)) {}
  virtual ~Optimizer() = default;
  virtual void step(double lr) = 0;
  void zero_grad();

 protected:
  std::vector<Param*> params_;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(std::vector<Param*> params, double momentum = 0.9);
  void step(double lr) override;

 private:
  double momentum_;
  std::vector<std::vector<float>> velocity_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(std::vector<Param*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(double lr) override;

 private:
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace nn
}  // namespace octa
