#include "evlog/dsp/mel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "evlog/dsp/fft.hpp"
#include "evlog/error.hpp"
#include "evlog/kern/kernels.hpp"

namespace evlog::dsp {

namespace {

// Mirrors index i into [0, n) without repeating the edge sample.
size_t reflect_index(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return static_cast<size_t>(j);
}

}  // namespace

void MelConfig::validate() const {
  if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0) {
    throw ConfigError("n_fft must be a power of two");
  }
  if (hop_length == 0 || hop_length > n_fft) {
    throw ConfigError("hop_length must be in (0, n_fft]");
  }
  if (top_db <= 0.0) throw ConfigError("top_db must be positive");
  if (n_mels == 0) throw ConfigError("n_mels must be positive");
  if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
  if (f_min < 0.0 || f_max <= f_min) {
    throw ConfigError("mel frequency range must satisfy 0 <= f_min < f_max");
  }
  if (amin <= 0.0) throw ConfigError("amin must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg) {
  const size_t n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.n_mels + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(cfg.n_mels + 1);
    edges[i] = mel_to_hz(mel);
  }
  std::vector<std::vector<double>> weights(cfg.n_mels,
                                           std::vector<double>(n_bins, 0.0));
  const double bin_hz = cfg.sample_rate / static_cast<double>(cfg.n_fft);
  for (size_t m = 0; m < cfg.n_mels; ++m) {
    const double f_l = edges[m];
    const double f_c = edges[m + 1];
    const double f_r = edges[m + 2];
    for (size_t k = 0; k < n_bins; ++k) {
      const double f = bin_hz * static_cast<double>(k);
      double w = 0.0;
      if (f > f_l && f < f_r) {
        w = f <= f_c ? (f - f_l) / (f_c - f_l) : (f_r - f) / (f_r - f_c);
      }
      weights[m][k] = w;
    }
  }
  return weights;
}

Spectrogram mel_power(std::span<const float> audio, const MelConfig& cfg) {
  cfg.validate();
  if (audio.empty()) throw ConfigError("mel_spectrogram: empty input");
  for (const float x : audio) {
    if (std::isnan(x)) throw ConfigError("mel_spectrogram: NaN in input");
  }

  const size_t n = audio.size();
  const size_t n_bins = cfg.n_fft / 2 + 1;
  const size_t frames = n / cfg.hop_length + 1;

  std::vector<double> window(cfg.n_fft);
  for (size_t i = 0; i < cfg.n_fft; ++i) {
    window[i] =
        0.5 - 0.5 * std::cos(6.283185307179586476925286766559 *
                             static_cast<double>(i) / static_cast<double>(cfg.n_fft));
  }

  const auto fbank = mel_filterbank(cfg);
  Fft fft(cfg.n_fft);
  const auto& k = kern::active();

  Spectrogram out;
  out.n_mels = cfg.n_mels;
  out.frames = frames;
  out.data.assign(cfg.n_mels * frames, 0.0);

  std::vector<std::complex<double>> buf(cfg.n_fft);
  std::vector<double> power(n_bins);
  const long long half = static_cast<long long>(cfg.n_fft) / 2;

  for (size_t t = 0; t < frames; ++t) {
    const long long center =
        static_cast<long long>(t) * static_cast<long long>(cfg.hop_length);
    for (size_t i = 0; i < cfg.n_fft; ++i) {
      const long long src = center - half + static_cast<long long>(i);
      const size_t idx = reflect_index(src, static_cast<long long>(n));
      buf[i] = {static_cast<double>(audio[idx]) * window[i], 0.0};
    }
    fft.forward(buf.data());
    for (size_t b = 0; b < n_bins; ++b) power[b] = std::norm(buf[b]);
    for (size_t m = 0; m < cfg.n_mels; ++m) {
      out.at(m, t) = k.dot(fbank[m].data(), power.data(), n_bins);
    }
  }
  return out;
}

void power_to_db_inplace(Spectrogram& s, double amin, double top_db) {
  double peak = -1e300;
  for (auto& v : s.data) {
    v = 10.0 * std::log10(std::max(v, amin));
    peak = std::max(peak, v);
  }
  const double floor_db = peak - top_db;
  for (auto& v : s.data) v = std::max(v, floor_db);
}

Spectrogram mel_spectrogram_db(std::span<const float> audio,
                               const MelConfig& cfg) {
  Spectrogram s = mel_power(audio, cfg);
  power_to_db_inplace(s, cfg.amin, cfg.top_db);
  return s;
}

}  // namespace evlog::dsp
