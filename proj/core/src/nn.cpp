#include "octa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octa {
namespace nn {

namespace {

void he_init(Param& p, int fan_in, Rng& rng) {
  double stddev = std::sqrt(2.0 / fan_in);
  for (float& v : p.w) v = static_cast<float>(rng.normal(0.0, stddev));
}

}  // namespace

// ---- Conv2d ----

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int ksize, Rng& init)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      k_(ksize),
      pad_(ksize / 2),
      weight_(name + ".w", static_cast<size_t>(out_ch) * in_ch * ksize * ksize),
      bias_(name + ".b", static_cast<size_t>(out_ch)) {
  he_init(weight_, in_ch * ksize * ksize, init);
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c != in_ch_) throw std::invalid_argument("conv input channel mismatch");
  cache_x_ = x;
  Tensor out(out_ch_, x.h, x.w);
  for (int oc = 0; oc < out_ch_; ++oc) {
    const float* wbase = &weight_.w[static_cast<size_t>(oc) * in_ch_ * k_ * k_];
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        float acc = bias_.w[oc];
        for (int ic = 0; ic < in_ch_; ++ic)
          for (int ky = 0; ky < k_; ++ky) {
            int sy = y + ky - pad_;
            if (sy < 0 || sy >= x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              int sx = xx + kx - pad_;
              if (sx < 0 || sx >= x.w) continue;
              acc += wbase[(static_cast<size_t>(ic) * k_ + ky) * k_ + kx] * x.at(ic, sy, sx);
            }
          }
        out.at(oc, y, xx) = acc;
      }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& dout) {
  const Tensor& x = cache_x_;
  Tensor dx(x.c, x.h, x.w);
  for (int oc = 0; oc < out_ch_; ++oc) {
    float* wbase = &weight_.w[static_cast<size_t>(oc) * in_ch_ * k_ * k_];
    float* gbase = &weight_.g[static_cast<size_t>(oc) * in_ch_ * k_ * k_];
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        float d = dout.at(oc, y, xx);
        if (d == 0.0f) continue;
        bias_.g[oc] += d;
        for (int ic = 0; ic < in_ch_; ++ic)
          for (int ky = 0; ky < k_; ++ky) {
            int sy = y + ky - pad_;
            if (sy < 0 || sy >= x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              int sx = xx + kx - pad_;
              if (sx < 0 || sx >= x.w) continue;
              size_t wi = (static_cast<size_t>(ic) * k_ + ky) * k_ + kx;
              gbase[wi] += d * x.at(ic, sy, sx);
              dx.at(ic, sy, sx) += d * wbase[wi];
            }
          }
      }
  }
  return dx;
}

// ---- Dense ----

Dense::Dense(std::string name, int in_dim, int out_dim, Rng& init)
    : in_(in_dim),
      out_(out_dim),
      weight_(name + ".w", static_cast<size_t>(in_dim) * out_dim),
      bias_(name + ".b", static_cast<size_t>(out_dim)) {
  he_init(weight_, in_dim, init);
}

void Dense::reinit(Rng& init) {
  he_init(weight_, in_, init);
  std::fill(bias_.w.begin(), bias_.w.end(), 0.0f);
}

std::vector<float> Dense::forward(const std::vector<float>& x) {
  if (x.size() != static_cast<size_t>(in_)) throw std::invalid_argument("dense input size mismatch");
  cache_x_ = x;
  std::vector<float> out(out_);
  for (int o = 0; o < out_; ++o) {
    float acc = bias_.w[o];
    const float* row = &weight_.w[static_cast<size_t>(o) * in_];
    for (int i = 0; i < in_; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
  return out;
}

std::vector<float> Dense::backward(const std::vector<float>& dout) {
  std::vector<float> dx(in_, 0.0f);
  for (int o = 0; o < out_; ++o) {
    float d = dout[o];
    bias_.g[o] += d;
    const float* row = &weight_.w[static_cast<size_t>(o) * in_];
    float* grow = &weight_.g[static_cast<size_t>(o) * in_];
    for (int i = 0; i < in_; ++i) {
      grow[i] += d * cache_x_[i];
      dx[i] += d * row[i];
    }
  }
  return dx;
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& x) {
  Tensor out = x;
  mask_.assign(x.size(), 0.0f);
  for (size_t i = 0; i < x.size(); ++i) {
    if (out.v[i] > 0.0f)
      mask_[i] = 1.0f;
    else
      out.v[i] = 0.0f;
  }
  return out;
}

Tensor ReLU::backward(const Tensor& dout) {
  Tensor dx = dout;
  for (size_t i = 0; i < dx.size(); ++i) dx.v[i] *= mask_[i];
  return dx;
}

std::vector<float> ReLU::forward(const std::vector<float>& x) {
  std::vector<float> out = x;
  mask_.assign(x.size(), 0.0f);
  for (size_t i = 0; i < x.size(); ++i) {
    if (out[i] > 0.0f)
      mask_[i] = 1.0f;
    else
      out[i] = 0.0f;
  }
  return out;
}

std::vector<float> ReLU::backward(const std::vector<float>& dout) {
  std::vector<float> dx = dout;
  for (size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

// ---- MaxPool2 ----

Tensor MaxPool2::forward(const Tensor& x) {
  in_h_ = x.h;
  in_w_ = x.w;
  c_ = x.c;
  Tensor out(x.c, x.h / 2, x.w / 2);
  argmax_.assign(out.size(), 0);
  for (int ch = 0; ch < x.c; ++ch)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx) {
        float best = -1e30f;
        int best_idx = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            int sy = 2 * y + dy, sx = 2 * xx + dx;
            float v = x.at(ch, sy, sx);
            if (v > best) {
              best = v;
              best_idx = (ch * in_h_ + sy) * in_w_ + sx;
            }
          }
        out.at(ch, y, xx) = best;
        argmax_[(static_cast<size_t>(ch) * out.h + y) * out.w + xx] = best_idx;
      }
  return out;
}

Tensor MaxPool2::backward(const Tensor& dout) {
  Tensor dx(c_, in_h_, in_w_);
  for (size_t i = 0; i < dout.size(); ++i) dx.v[argmax_[i]] += dout.v[i];
  return dx;
}

// ---- AvgPool ----

Tensor AvgPool::forward(const Tensor& x) {
  if (x.h % factor_ != 0 || x.w % factor_ != 0)
    throw std::invalid_argument("avgpool: size not divisible by factor");
  in_h_ = x.h;
  in_w_ = x.w;
  c_ = x.c;
  Tensor out(x.c, x.h / factor_, x.w / factor_);
  float inv = 1.0f / (factor_ * factor_);
  for (int ch = 0; ch < x.c; ++ch)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx) {
        float acc = 0.0f;
        for (int dy = 0; dy < factor_; ++dy)
          for (int dx = 0; dx < factor_; ++dx) acc += x.at(ch, y * factor_ + dy, xx * factor_ + dx);
        out.at(ch, y, xx) = acc * inv;
      }
  return out;
}

Tensor AvgPool::backward(const Tensor& dout) {
  Tensor dx(c_, in_h_, in_w_);
  float inv = 1.0f / (factor_ * factor_);
  for (int ch = 0; ch < c_; ++ch)
    for (int y = 0; y < dout.h; ++y)
      for (int xx = 0; xx < dout.w; ++xx) {
        float d = dout.at(ch, y, xx) * inv;
        for (int dy = 0; dy < factor_; ++dy)
          for (int dxp = 0; dxp < factor_; ++dxp)
            dx.at(ch, y * factor_ + dy, xx * factor_ + dxp) += d;
      }
  return dx;
}

// ---- UpsampleNearest2 ----

Tensor UpsampleNearest2::forward(const Tensor& x) {
  Tensor out(x.c, x.h * 2, x.w * 2);
  for (int ch = 0; ch < x.c; ++ch)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx) out.at(ch, y, xx) = x.at(ch, y / 2, xx / 2);
  return out;
}

Tensor UpsampleNearest2::backward(const Tensor& dout) {
  Tensor dx(dout.c, dout.h / 2, dout.w / 2);
  for (int ch = 0; ch < dout.c; ++ch)
    for (int y = 0; y < dout.h; ++y)
      for (int xx = 0; xx < dout.w; ++xx) dx.at(ch, y / 2, xx / 2) += dout.at(ch, y, xx);
  return dx;
}

// ---- activations ----

std::vector<double> softmax(const std::vector<float>& logits) {
  double maxv = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - maxv);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// ---- optimizers ----

void Optimizer::zero_grad() {
  for (Param* p : params_) std::fill(p->g.begin(), p->g.end(), 0.0f);
}

Sgd::Sgd(std::vector<Param*> params, double momentum)
    : Optimizer(std::move(params)), momentum_(momentum) {
  for (Param* p : params_) velocity_.emplace_back(p->w.size(), 0.0f);
}

void Sgd::step(double lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    auto& vel = velocity_[i];
    for (size_t j = 0; j < p.w.size(); ++j) {
      vel[j] = static_cast<float>(momentum_ * vel[j] + p.g[j]);
      p.w[j] -= static_cast<float>(lr * vel[j]);
    }
  }
}

Adam::Adam(std::vector<Param*> params, double beta1, double beta2, double eps)
    : Optimizer(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.emplace_back(p->w.size(), 0.0f);
    v_.emplace_back(p->w.size(), 0.0f);
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    for (size_t j = 0; j < p.w.size(); ++j) {
      double g = p.g[j];
      m_[i][j] = static_cast<float>(beta1_ * m_[i][j] + (1.0 - beta1_) * g);
      v_[i][j] = static_cast<float>(beta2_ * v_[i][j] + (1.0 - beta2_) * g * g);
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      p.w[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

}  // namespace nn
}  // namespace octa
