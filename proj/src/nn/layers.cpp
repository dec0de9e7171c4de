#include "evlog/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evlog/kern/kernels.hpp"

namespace evlog::nn {

namespace {
const kern::Kernels& K() { return kern::active(); }
}  // namespace

Conv1d::Conv1d(size_t in_ch, size_t out_ch, size_t kernel, size_t pad)
    : weight(out_ch * in_ch * kernel, 0.0),
      bias(out_ch, 0.0),
      grad_weight(weight.size(), 0.0),
      grad_bias(out_ch, 0.0),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      pad_(pad) {}

void Conv1d::init(Prng& rng) {
  const double bound =
      1.0 / std::sqrt(static_cast<double>(in_ch_ * kernel_));
  for (auto& w : weight) w = rng.uniform(-bound, bound);
  for (auto& b : bias) b = rng.uniform(-bound, bound);
}

Tensor3 Conv1d::forward(const Tensor3& x) {
  if (x.channels != in_ch_) {
    throw ShapeError("Conv1d: input has " + std::to_string(x.channels) +
                     " channels, layer expects " + std::to_string(in_ch_));
  }
  if (x.time < 1) throw ShapeError("Conv1d: empty time axis");
  cached_input_ = x;
  const size_t T = x.time;
  Tensor3 y(x.batch, out_ch_, T);
  for (size_t b = 0; b < x.batch; ++b) {
    for (size_t o = 0; o < out_ch_; ++o) {
      double* yrow = y.row(b, o);
      const double bias_o = bias[o];
      for (size_t t = 0; t < T; ++t) yrow[t] = bias_o;
      for (size_t i = 0; i < in_ch_; ++i) {
        const double* xrow = x.row(b, i);
        const double* w = &weight[(o * in_ch_ + i) * kernel_];
        for (size_t kk = 0; kk < kernel_; ++kk) {
          // y[t] += w[kk] * x[t + kk - pad] over the valid overlap
          const long long shift = static_cast<long long>(kk) -
                                  static_cast<long long>(pad_);
          const size_t t0 = shift < 0 ? static_cast<size_t>(-shift) : 0;
          const size_t t1 = shift > 0 ? T - static_cast<size_t>(shift) : T;
          if (t1 <= t0) continue;
          K().axpy(w[kk], xrow + static_cast<long long>(t0) + shift, yrow + t0,
                   t1 - t0);
        }
      }
    }
  }
  return y;
}

Tensor3 Conv1d::backward(const Tensor3& grad_out) {
  const Tensor3& x = cached_input_;
  const size_t T = x.time;
  Tensor3 gx(x.batch, in_ch_, T);
  for (size_t b = 0; b < x.batch; ++b) {
    for (size_t o = 0; o < out_ch_; ++o) {
      const double* grow = grad_out.row(b, o);
      grad_bias[o] += K().sum(grow, T);
      for (size_t i = 0; i < in_ch_; ++i) {
        const double* xrow = x.row(b, i);
        double* gxrow = gx.row(b, i);
        const size_t wbase = (o * in_ch_ + i) * kernel_;
        for (size_t kk = 0; kk < kernel_; ++kk) {
          const long long shift = static_cast<long long>(kk) -
                                  static_cast<long long>(pad_);
          const size_t t0 = shift < 0 ? static_cast<size_t>(-shift) : 0;
          const size_t t1 = shift > 0 ? T - static_cast<size_t>(shift) : T;
          if (t1 <= t0) continue;
          const double* xseg = xrow + static_cast<long long>(t0) + shift;
          // dw[kk] = sum_t g[t] * x[t+shift]
          grad_weight[wbase + kk] += K().dot(grow + t0, xseg, t1 - t0);
          // dx[t+shift] += w[kk] * g[t]
          K().axpy(weight[wbase + kk], grow + t0,
                   gxrow + static_cast<long long>(t0) + shift, t1 - t0);
        }
      }
    }
  }
  return gx;
}

void Conv1d::zero_grad() {
  std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

std::vector<ParamRef> Conv1d::params() {
  return {{weight.data(), grad_weight.data(), weight.size()},
          {bias.data(), grad_bias.data(), bias.size()}};
}

BatchNorm1d::BatchNorm1d(size_t channels, double momentum, double eps)
    : gamma(channels, 1.0),
      beta(channels, 0.0),
      grad_gamma(channels, 0.0),
      grad_beta(channels, 0.0),
      running_mean(channels, 0.0),
      running_var(channels, 1.0),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {}

Tensor3 BatchNorm1d::forward(const Tensor3& x, bool train) {
  if (x.channels != channels_) {
    throw ShapeError("BatchNorm1d: channel mismatch");
  }
  const size_t n = x.batch * x.time;
  Tensor3 y(x.batch, x.channels, x.time);
  if (train) {
    if (n < 2) {
      throw ShapeError(
          "BatchNorm1d: train mode needs batch*time >= 2 per channel");
    }
    cached_xhat_ = Tensor3(x.batch, x.channels, x.time);
    cached_invstd_.assign(channels_, 0.0);
    for (size_t c = 0; c < channels_; ++c) {
      double total = 0.0;
      for (size_t b = 0; b < x.batch; ++b) total += K().sum(x.row(b, c), x.time);
      const double mean = total / static_cast<double>(n);
      double ss = 0.0;
      for (size_t b = 0; b < x.batch; ++b) {
        ss += K().sumsq_centered(x.row(b, c), mean, x.time);
      }
      const double var = ss / static_cast<double>(n);  // biased
      const double invstd = 1.0 / std::sqrt(var + eps_);
      cached_invstd_[c] = invstd;
      for (size_t b = 0; b < x.batch; ++b) {
        // xhat = (x - mean) * invstd, y = gamma * xhat + beta
        K().scale_shift(x.row(b, c), invstd, -mean * invstd,
                        cached_xhat_.row(b, c), x.time);
        K().scale_shift(cached_xhat_.row(b, c), gamma[c], beta[c], y.row(b, c),
                        x.time);
      }
      const double unbiased =
          n > 1 ? ss / static_cast<double>(n - 1) : var;
      running_mean[c] = (1.0 - momentum_) * running_mean[c] + momentum_ * mean;
      running_var[c] = (1.0 - momentum_) * running_var[c] + momentum_ * unbiased;
    }
  } else {
    for (size_t c = 0; c < channels_; ++c) {
      const double invstd = 1.0 / std::sqrt(running_var[c] + eps_);
      const double a = gamma[c] * invstd;
      const double b0 = beta[c] - gamma[c] * running_mean[c] * invstd;
      for (size_t b = 0; b < x.batch; ++b) {
        K().scale_shift(x.row(b, c), a, b0, y.row(b, c), x.time);
      }
    }
  }
  return y;
}

Tensor3 BatchNorm1d::backward(const Tensor3& grad_out) {
  const Tensor3& xhat = cached_xhat_;
  const size_t n = xhat.batch * xhat.time;
  Tensor3 gx(xhat.batch, xhat.channels, xhat.time);
  for (size_t c = 0; c < channels_; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (size_t b = 0; b < xhat.batch; ++b) {
      sum_g += K().sum(grad_out.row(b, c), xhat.time);
      sum_gx += K().dot(grad_out.row(b, c), xhat.row(b, c), xhat.time);
    }
    grad_beta[c] += sum_g;
    grad_gamma[c] += sum_gx;
    const double scale = gamma[c] * cached_invstd_[c] / static_cast<double>(n);
    for (size_t b = 0; b < xhat.batch; ++b) {
      const double* g = grad_out.row(b, c);
      const double* xh = xhat.row(b, c);
      double* out = gx.row(b, c);
      for (size_t t = 0; t < xhat.time; ++t) {
        out[t] = scale * (static_cast<double>(n) * g[t] - sum_g - xh[t] * sum_gx);
      }
    }
  }
  return gx;
}

void BatchNorm1d::zero_grad() {
  std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
  std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
}

std::vector<ParamRef> BatchNorm1d::params() {
  return {{gamma.data(), grad_gamma.data(), gamma.size()},
          {beta.data(), grad_beta.data(), beta.size()}};
}

Tensor3 Relu::forward(const Tensor3& x) {
  cached_input_ = x;
  Tensor3 y(x.batch, x.channels, x.time);
  K().relu(x.data.data(), y.data.data(), x.data.size());
  return y;
}

Tensor3 Relu::backward(const Tensor3& grad_out) const {
  const Tensor3& x = cached_input_;
  Tensor3 gx(x.batch, x.channels, x.time);
  K().relu_grad(x.data.data(), grad_out.data.data(), gx.data.data(),
                x.data.size());
  return gx;
}

Matrix adaptive_avg_pool(const Tensor3& x) {
  if (x.time < 1) throw ShapeError("adaptive_avg_pool: empty time axis");
  Matrix y(x.batch, x.channels);
  for (size_t b = 0; b < x.batch; ++b) {
    for (size_t c = 0; c < x.channels; ++c) {
      y.at(b, c) = K().sum(x.row(b, c), x.time) / static_cast<double>(x.time);
    }
  }
  return y;
}

Tensor3 adaptive_avg_pool_backward(const Matrix& grad_out, size_t time) {
  Tensor3 gx(grad_out.rows, grad_out.cols, time);
  const double inv = 1.0 / static_cast<double>(time);
  for (size_t b = 0; b < grad_out.rows; ++b) {
    for (size_t c = 0; c < grad_out.cols; ++c) {
      const double g = grad_out.at(b, c) * inv;
      double* row = gx.row(b, c);
      for (size_t t = 0; t < time; ++t) row[t] = g;
    }
  }
  return gx;
}

Linear::Linear(size_t in, size_t out)
    : weight(out * in, 0.0),
      bias(out, 0.0),
      grad_weight(out * in, 0.0),
      grad_bias(out, 0.0),
      in_(in),
      out_(out) {}

void Linear::init(Prng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (auto& w : weight) w = rng.uniform(-bound, bound);
  for (auto& b : bias) b = rng.uniform(-bound, bound);
}

Matrix Linear::forward(const Matrix& x) {
  if (x.cols != in_) throw ShapeError("Linear: input feature mismatch");
  cached_input_ = x;
  Matrix y(x.rows, out_);
  for (size_t r = 0; r < x.rows; ++r) {
    for (size_t o = 0; o < out_; ++o) {
      y.at(r, o) = bias[o] + K().dot(&weight[o * in_], x.row(r), in_);
    }
  }
  return y;
}

Matrix Linear::backward(const Matrix& grad_out) {
  const Matrix& x = cached_input_;
  Matrix gx(x.rows, in_);
  for (size_t r = 0; r < x.rows; ++r) {
    for (size_t o = 0; o < out_; ++o) {
      const double g = grad_out.at(r, o);
      grad_bias[o] += g;
      K().axpy(g, x.row(r), &grad_weight[o * in_], in_);
      K().axpy(g, &weight[o * in_], gx.row(r), in_);
    }
  }
  return gx;
}

void Linear::zero_grad() {
  std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

std::vector<ParamRef> Linear::params() {
  return {{weight.data(), grad_weight.data(), weight.size()},
          {bias.data(), grad_bias.data(), bias.size()}};
}

LossResult cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows) {
    throw ShapeError("cross_entropy: label count mismatch");
  }
  const size_t n = logits.rows;
  const size_t c = logits.cols;
  if (n == 0) throw ShapeError("cross_entropy: empty batch");
  LossResult out;
  out.grad = Matrix(n, c);
  out.probs = Matrix(n, c);
  double total = 0.0;
  for (size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<size_t>(label) >= c) {
      throw ShapeError("cross_entropy: label " + std::to_string(label) +
                       " out of range [0, " + std::to_string(c) + ")");
    }
    const double* l = logits.row(r);
    double peak = l[0];
    for (size_t j = 1; j < c; ++j) peak = std::max(peak, l[j]);
    double z = 0.0;
    for (size_t j = 0; j < c; ++j) z += std::exp(l[j] - peak);
    const double logz = peak + std::log(z);
    total += logz - l[static_cast<size_t>(label)];
    for (size_t j = 0; j < c; ++j) {
      const double p = std::exp(l[j] - logz);
      out.probs.at(r, j) = p;
      out.grad.at(r, j) =
          (p - (static_cast<size_t>(label) == j ? 1.0 : 0.0)) /
          static_cast<double>(n);
    }
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

}  // namespace evlog::nn
