#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evlog/nn/tensor.hpp"
#include "evlog/prng.hpp"

namespace evlog::nn {

// A parameter block with its gradient, as seen by the optimizer.
struct ParamRef {
  double* value;
  double* grad;
  size_t n;
};

// Temporal cross-correlation, stride 1, symmetric zero padding (output
// length == input length for kernel 3 / pad 1).
class Conv1d {
 public:
  Conv1d(size_t in_ch, size_t out_ch, size_t kernel = 3, size_t pad = 1);

  void init(Prng& rng);
  Tensor3 forward(const Tensor3& x);
  // grad_out -> grad_in; accumulates into the weight/bias gradients.
  Tensor3 backward(const Tensor3& grad_out);
  void zero_grad();
  std::vector<ParamRef> params();

  size_t in_channels() const { return in_ch_; }
  size_t out_channels() const { return out_ch_; }
  size_t kernel() const { return kernel_; }

  std::vector<double> weight;  // (out, in, k)
  std::vector<double> bias;    // (out)
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;

 private:
  size_t in_ch_, out_ch_, kernel_, pad_;
  Tensor3 cached_input_;
};

// Per-channel batch normalization over (batch, time). Train mode uses batch
// statistics (biased variance) and folds them into the running estimates
// with momentum 0.1 (running variance stored unbiased); eval mode uses the
// running estimates.
class BatchNorm1d {
 public:
  explicit BatchNorm1d(size_t channels, double momentum = 0.1,
                       double eps = 1e-5);

  Tensor3 forward(const Tensor3& x, bool train);
  Tensor3 backward(const Tensor3& grad_out);
  void zero_grad();
  std::vector<ParamRef> params();
  size_t channels() const { return channels_; }

  std::vector<double> gamma, beta;
  std::vector<double> grad_gamma, grad_beta;
  std::vector<double> running_mean, running_var;

 private:
  size_t channels_;
  double momentum_, eps_;
  Tensor3 cached_xhat_;
  std::vector<double> cached_invstd_;
};

// max(x, 0); keeps the pre-activation for the backward mask.
class Relu {
 public:
  Tensor3 forward(const Tensor3& x);
  Tensor3 backward(const Tensor3& grad_out) const;

 private:
  Tensor3 cached_input_;
};

// Mean over the time axis down to length 1.
Matrix adaptive_avg_pool(const Tensor3& x);
Tensor3 adaptive_avg_pool_backward(const Matrix& grad_out, size_t time);

class Linear {
 public:
  Linear(size_t in, size_t out);

  void init(Prng& rng);
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);
  void zero_grad();
  std::vector<ParamRef> params();

  std::vector<double> weight;  // (out, in)
  std::vector<double> bias;    // (out)
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;

 private:
  size_t in_, out_;
  Matrix cached_input_;
};

struct LossResult {
  double loss = 0.0;
  Matrix grad;            // d loss / d logits
  Matrix probs;           // softmax rows
};

// Softmax + NLL, mean over the batch. Labels must be in [0, n_classes).
LossResult cross_entropy(const Matrix& logits, std::span<const int> labels);

}  // namespace evlog::nn
