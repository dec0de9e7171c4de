#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evlog/nn/layers.hpp"

namespace evlog::nn {

// conv(in->64) -> ReLU -> BN -> conv(64->32) -> ReLU -> BN -> mean-pool ->
// fc(32->3). relu_before_bn=false flips each activation/norm pair into the
// conventional conv -> BN -> ReLU order.
struct CnnConfig {
  size_t in_channels = 64;
  size_t conv1_filters = 64;
  size_t conv2_filters = 32;
  size_t kernel = 3;
  size_t classes = 3;
  bool relu_before_bn = true;
};

class Cnn1d {
 public:
  explicit Cnn1d(const CnnConfig& cfg);

  void init(uint64_t seed);

  // Training-mode forward keeps per-layer caches for backward().
  Matrix forward(const Tensor3& x, bool train);
  // Backpropagates d loss / d logits; accumulates parameter gradients.
  void backward(const Matrix& grad_logits);
  void zero_grad();
  std::vector<ParamRef> params();

  const CnnConfig& config() const { return cfg_; }

  Conv1d conv1;
  BatchNorm1d bn1;
  Conv1d conv2;
  BatchNorm1d bn2;
  Linear fc;

 private:
  CnnConfig cfg_;
  Relu relu1_, relu2_;
  size_t cached_time_ = 0;
};

// Argmax class per row.
std::vector<int> predict(const Matrix& logits);

}  // namespace evlog::nn
