#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace evlog::dsp {

// Iterative radix-2 Cooley-Tukey with cached twiddles. Size must be a power
// of two.
class Fft {
 public:
  explicit Fft(size_t n);

  size_t size() const { return n_; }

  // In-place forward transform of n_ complex points.
  void forward(std::complex<double>* data) const;

 private:
  size_t n_;
  std::vector<size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace evlog::dsp
