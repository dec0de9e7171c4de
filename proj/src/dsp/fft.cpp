#include "evlog/dsp/fft.hpp"

#include <cmath>

#include "evlog/error.hpp"

namespace evlog::dsp {

Fft::Fft(size_t n) : n_(n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ConfigError("FFT size must be a power of two");
  }
  bitrev_.resize(n);
  size_t log2n = 0;
  while ((size_t{1} << log2n) < n) ++log2n;
  for (size_t i = 0; i < n; ++i) {
    size_t r = 0;
    for (size_t b = 0; b < log2n; ++b) {
      r |= ((i >> b) & 1u) << (log2n - 1 - b);
    }
    bitrev_[i] = r;
  }
  twiddle_.resize(n / 2);
  const double step = -6.283185307179586476925286766559 / static_cast<double>(n);
  for (size_t k = 0; k < n / 2; ++k) {
    const double a = step * static_cast<double>(k);
    twiddle_[k] = {std::cos(a), std::sin(a)};
  }
}

void Fft::forward(std::complex<double>* data) const {
  for (size_t i = 0; i < n_; ++i) {
    const size_t j = bitrev_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (size_t len = 2; len <= n_; len <<= 1) {
    const size_t half = len >> 1;
    const size_t stride = n_ / len;
    for (size_t base = 0; base < n_; base += len) {
      for (size_t k = 0; k < half; ++k) {
        const std::complex<double> w = twiddle_[k * stride];
        const std::complex<double> u = data[base + k];
        const std::complex<double> v = data[base + k + half] * w;
        data[base + k] = u + v;
        data[base + k + half] = u - v;
      }
    }
  }
}

}  // namespace evlog::dsp
