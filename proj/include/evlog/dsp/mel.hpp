#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evlog::dsp {

struct MelConfig {
  size_t n_mels = 64;
  size_t n_fft = 1024;
  size_t hop_length = 512;  // n_fft / 2
  double top_db = 80.0;
  double f_min = 0.0;
  double f_max = 8000.0;  // rate / 2
  double sample_rate = 16000.0;
  double amin = 1e-10;  // dB floor argument

  void validate() const;  // throws ConfigError
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// 64 triangular filters over the n_fft/2+1 bin frequencies, no area
// normalization. weights[m][k] for mel bin m, FFT bin k.
std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg);

// Row-major (n_mels x frames) spectrogram.
struct Spectrogram {
  size_t n_mels = 0;
  size_t frames = 0;
  std::vector<double> data;

  double& at(size_t m, size_t f) { return data[m * frames + f]; }
  double at(size_t m, size_t f) const { return data[m * frames + f]; }
};

// Power mel spectrogram: centered reflect-padded STFT with a periodic Hann
// window, |X|^2, mel filterbank. frames = len/hop + 1.
Spectrogram mel_power(std::span<const float> audio, const MelConfig& cfg);

// 10*log10(max(P, amin)), then each spectrogram is clamped to its own top
// top_db decibels.
Spectrogram mel_spectrogram_db(std::span<const float> audio,
                               const MelConfig& cfg);
void power_to_db_inplace(Spectrogram& s, double amin, double top_db);

}  // namespace evlog::dsp
