#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace evlog {

enum class ChannelId : uint8_t {
  AudioMono,
  VibX,
  VibY,
  VibZ,
  Current,
  ReedLevel,
};

const char* channel_name(ChannelId id);

// Fixed-rate raw sensor channel. Samples are physical values; vibration
// channels may carry NaN for a dropped reading (rendered as an empty CSV
// cell downstream).
struct SampleStream {
  ChannelId channel = ChannelId::AudioMono;
  double rate = 0.0;  // Hz
  double t0 = 0.0;    // seconds from scenario start of sample 0
  std::vector<float> samples;

  double duration() const {
    return rate > 0.0 ? static_cast<double>(samples.size()) / rate : 0.0;
  }
  // Index of the last sample at or before time t (clamped into range). The
  // epsilon absorbs representation error in t so a query at an exact sample
  // instant lands on that sample.
  size_t index_at(double t) const {
    if (samples.empty()) return 0;
    double idx = std::floor((t - t0) * rate + 1e-9);
    if (idx < 0.0) idx = 0.0;
    const double last = static_cast<double>(samples.size() - 1);
    if (idx > last) idx = last;
    return static_cast<size_t>(idx);
  }
};

}  // namespace evlog
