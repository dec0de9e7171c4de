#pragma once

#include <cstddef>
#include <string>

namespace evlog::kern {

// Hot inner loops of the numeric pipeline. Every entry has a scalar
// reference implementation and may have SIMD variants; the active table is
// picked once at startup from CPU features (see active()). SIMD variants
// must agree with the scalar reference to floating-point reassociation
// error; the equivalence suite enforces this.
struct Kernels {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, size_t n);
  // sum_i (x[i] - mean)^2
  double (*sumsq_centered)(const double* x, double mean, size_t n);
  // y[i] = a * x[i] + b
  void (*scale_shift)(const double* x, double a, double b, double* y, size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, size_t n);
  // dx[i] = x[i] > 0 ? g[i] : 0   (x is the pre-activation)
  void (*relu_grad)(const double* x, const double* g, double* dx, size_t n);
  // Bias-corrected Adam update over a parameter block.
  //   m = b1*m + (1-b1)*g ; v = b2*v + (1-b2)*g^2
  //   p -= lr * (m/c1) / (sqrt(v/c2) + eps)
  // where c1 = 1-b1^t and c2 = 1-b2^t are supplied by the caller.
  void (*adam_update)(double* p, const double* g, double* m, double* v,
                      size_t n, double lr, double b1, double b2, double eps,
                      double c1, double c2);

  const char* name;
};

// The dispatch table selected for this process. Selection order:
//   1. EVLOG_KERNEL environment variable ("scalar" or "avx2"), if set;
//   2. AVX2+FMA when the CPU supports them and the build enabled them;
//   3. scalar reference.
const Kernels& active();

// Named tables, for equivalence tests and forced selection.
const Kernels& scalar_kernels();
const Kernels* avx2_kernels();  // nullptr when unsupported or not built

}  // namespace evlog::kern
