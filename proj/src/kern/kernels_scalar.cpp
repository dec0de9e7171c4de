#include <cmath>
#include <cstddef>

#include "evlog/kern/kernels.hpp"

// Reference kernels. Plain loops, no manual unrolling: these define the
// semantics the SIMD variants are tested against.

namespace evlog::kern {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_scalar(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_centered_scalar(const double* x, double mean, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    acc += d * d;
  }
  return acc;
}

void scale_shift_scalar(const double* x, double a, double b, double* y,
                        size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

void relu_scalar(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* x, const double* g, double* dx, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void adam_update_scalar(double* p, const double* g, double* m, double* v,
                        size_t n, double lr, double b1, double b2, double eps,
                        double c1, double c2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table = {
      dot_scalar,         axpy_scalar, sum_scalar,
      sumsq_centered_scalar, scale_shift_scalar, relu_scalar,
      relu_grad_scalar,   adam_update_scalar,
      "scalar",
  };
  return table;
}

}  // namespace evlog::kern
