#pragma once

#include <cstdint>
#include <vector>

#include "evlog/nn/layers.hpp"

namespace evlog::nn {

// Bias-corrected Adam, beta defaults matching the training recipe.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.98, double eps = 1e-9)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update over all parameter blocks. Blocks must be passed in
  // the same order every step. Throws ShapeError on non-finite gradients.
  void step(const std::vector<ParamRef>& params, double lr);

  int64_t steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// lr(epoch) = initial * gamma^floor(epoch / step_size)
class StepLr {
 public:
  StepLr(double initial_lr = 1e-3, int step_size = 3, double gamma = 0.5);

  double lr(int epoch) const;

 private:
  double initial_lr_;
  int step_size_;
  double gamma_;
};

}  // namespace evlog::nn
