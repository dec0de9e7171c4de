#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evlog/error.hpp"

namespace evlog::nn {

// Dense (batch, channel, time) array, row-major, double precision.
struct Tensor3 {
  size_t batch = 0;
  size_t channels = 0;
  size_t time = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(size_t b, size_t c, size_t t)
      : batch(b), channels(c), time(t), data(b * c * t, 0.0) {}

  size_t size() const { return batch * channels * time; }

  double* row(size_t b, size_t c) {
    return data.data() + (b * channels + c) * time;
  }
  const double* row(size_t b, size_t c) const {
    return data.data() + (b * channels + c) * time;
  }
  double& at(size_t b, size_t c, size_t t) { return row(b, c)[t]; }
  double at(size_t b, size_t c, size_t t) const { return row(b, c)[t]; }

  bool all_finite() const {
    for (const double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

// Plain matrix for logits / fully connected activations: (batch, features).
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(size_t r) { return data.data() + r * cols; }
  const double* row(size_t r) const { return data.data() + r * cols; }
  double& at(size_t r, size_t c) { return row(r)[c]; }
  double at(size_t r, size_t c) const { return row(r)[c]; }
};

}  // namespace evlog::nn
