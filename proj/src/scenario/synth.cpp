#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "evlog/error.hpp"
#include "evlog/prng.hpp"
#include "evlog/scenario.hpp"

namespace evlog {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr uint64_t kTagAudioNoise = 0x21;
constexpr uint64_t kTagVibNoise = 0x22;  // +axis
constexpr uint64_t kTagEventBase = 0x1000;
constexpr uint64_t kTagVibDropout = 0x31;

constexpr double kReedRampSeconds = 0.064;

struct DoorInterval {
  double open_t;
  double close_t;
  bool soft_close;  // unpaired open: level decays, no falling edge
};

// Walks the door events and reconstructs the open intervals. A DoorClose is
// always the sharp fall that labels the event; an open with no following
// close drifts shut after the dwell (soft close, below edge threshold).
std::vector<DoorInterval> door_intervals(const Scenario& scenario,
                                         const ScenarioConfig& config) {
  std::vector<const EventSpec*> doors;
  for (const auto& ev : scenario.events) {
    if (ev.kind != EventKind::WaterBoiled) doors.push_back(&ev);
  }
  std::vector<DoorInterval> intervals;
  int open_depth = 0;
  for (size_t i = 0; i < doors.size(); ++i) {
    const EventSpec& ev = *doors[i];
    if (ev.kind == EventKind::DoorClose) {
      if (open_depth == 0) {
        throw ConfigError("DoorClose at " + std::to_string(ev.onset) +
                          " s without a preceding DoorOpen");
      }
      open_depth = 0;
      continue;
    }
    if (open_depth != 0) {
      throw ConfigError("DoorOpen at " + std::to_string(ev.onset) +
                        " s while the door is still open");
    }
    DoorInterval iv{ev.onset, 0.0, false};
    const bool paired =
        i + 1 < doors.size() && doors[i + 1]->kind == EventKind::DoorClose;
    if (paired) {
      iv.close_t = doors[i + 1]->onset;
      open_depth = 1;  // consumed by the close branch above
    } else {
      double reclose = ev.onset + config.door_dwell_s;
      if (i + 1 < doors.size()) {
        reclose = std::min(reclose, doors[i + 1]->onset - kReedRampSeconds - 0.05);
      }
      reclose = std::min(reclose, scenario.length - kReedRampSeconds);
      iv.close_t = std::max(reclose, ev.onset + 1e-3);
      iv.soft_close = true;
    }
    intervals.push_back(iv);
  }
  return intervals;
}

size_t stream_size(double rate, double length) {
  return static_cast<size_t>(std::llround(rate * length));
}

void add_burst(SampleStream& s, double onset, double duration, double amp,
               Prng& rng) {
  // Damped broadband transient: white noise under an exp(-t / (d/3)) decay.
  const size_t i0 = static_cast<size_t>(std::max(0.0, onset * s.rate));
  const size_t i1 =
      std::min(s.samples.size(),
               static_cast<size_t>((onset + duration) * s.rate) + 1);
  const double tau = duration / 3.0;
  for (size_t i = i0; i < i1; ++i) {
    const double t = static_cast<double>(i) / s.rate - onset;
    if (t < 0.0) continue;
    s.samples[i] += static_cast<float>(amp * std::exp(-t / tau) * rng.gaussian());
  }
}

void add_tonal_band(SampleStream& s, double onset, double duration, double amp,
                    double f_lo, double f_hi, int components, Prng& rng,
                    double ramp) {
  // Sustained band-limited hum: random-phase sinusoids under a plateau
  // envelope with raised-cosine ramps.
  std::vector<double> freq(static_cast<size_t>(components));
  std::vector<double> phase(static_cast<size_t>(components));
  std::vector<double> a(static_cast<size_t>(components));
  const double per = amp / std::sqrt(static_cast<double>(components));
  for (int k = 0; k < components; ++k) {
    freq[static_cast<size_t>(k)] = rng.uniform(f_lo, f_hi);
    phase[static_cast<size_t>(k)] = rng.uniform(0.0, kTwoPi);
    a[static_cast<size_t>(k)] = per * rng.uniform(0.7, 1.3);
  }
  const size_t i0 = static_cast<size_t>(std::max(0.0, onset * s.rate));
  const size_t i1 =
      std::min(s.samples.size(),
               static_cast<size_t>((onset + duration) * s.rate) + 1);
  for (size_t i = i0; i < i1; ++i) {
    const double t = static_cast<double>(i) / s.rate - onset;
    if (t < 0.0 || t > duration) continue;
    double env = 1.0;
    if (t < ramp) env = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * t / ramp);
    if (t > duration - ramp) {
      env = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * (duration - t) / ramp);
    }
    double v = 0.0;
    for (int k = 0; k < components; ++k) {
      const size_t ks = static_cast<size_t>(k);
      v += a[ks] * std::sin(kTwoPi * freq[ks] * t + phase[ks]);
    }
    s.samples[i] += static_cast<float>(env * v);
  }
}

}  // namespace

FeatureStreams synth_feature_streams(const Scenario& scenario,
                                     const ScenarioConfig& config,
                                     uint64_t seed) {
  FeatureStreams out;
  out.audio.channel = ChannelId::AudioMono;
  out.audio.rate = config.audio_rate;
  out.audio.samples.resize(stream_size(config.audio_rate, scenario.length));

  const ChannelId vib_ids[3] = {ChannelId::VibX, ChannelId::VibY,
                                ChannelId::VibZ};
  for (int axis = 0; axis < 3; ++axis) {
    auto& v = out.vibration[static_cast<size_t>(axis)];
    v.channel = vib_ids[axis];
    v.rate = config.vib_rate;
    v.samples.resize(stream_size(config.vib_rate, scenario.length));
  }

  // Background noise floors.
  const double audio_sigma = std::pow(10.0, config.background_dbfs / 20.0);
  {
    Prng rng(derive_seed(seed, kTagAudioNoise));
    for (auto& x : out.audio.samples) {
      x = static_cast<float>(audio_sigma * rng.gaussian());
    }
  }
  for (int axis = 0; axis < 3; ++axis) {
    Prng rng(derive_seed(seed, kTagVibNoise + static_cast<uint64_t>(axis)));
    for (auto& x : out.vibration[static_cast<size_t>(axis)].samples) {
      x = static_cast<float>(config.vib_noise_sigma * rng.gaussian());
    }
  }

  // Event templates. Doors are broadband impulsive bursts (close: longer and
  // harder); boiling is a sustained low-frequency band, strongest on the
  // vibration z axis.
  for (size_t i = 0; i < scenario.events.size(); ++i) {
    const EventSpec& ev = scenario.events[i];
    Prng rng(derive_seed(seed, kTagEventBase + i));
    switch (ev.kind) {
      case EventKind::DoorOpen: {
        const double a_audio = rng.uniform(0.55, 0.75);
        add_burst(out.audio, ev.onset, ev.duration, a_audio, rng);
        for (int axis = 0; axis < 3; ++axis) {
          const double a_vib = rng.uniform(0.15, 0.35);
          add_burst(out.vibration[static_cast<size_t>(axis)], ev.onset,
                    ev.duration, a_vib, rng);
        }
        break;
      }
      case EventKind::DoorClose: {
        const double a_audio = rng.uniform(0.62, 0.85);
        add_burst(out.audio, ev.onset, ev.duration, a_audio, rng);
        for (int axis = 0; axis < 3; ++axis) {
          const double a_vib = rng.uniform(0.22, 0.45);
          add_burst(out.vibration[static_cast<size_t>(axis)], ev.onset,
                    ev.duration, a_vib, rng);
        }
        break;
      }
      case EventKind::WaterBoiled: {
        const double a_audio = rng.uniform(0.3, 0.45);
        add_tonal_band(out.audio, ev.onset, ev.duration, a_audio, 80.0, 350.0,
                       24, rng, 0.3);
        const double a_z = rng.uniform(0.15, 0.25);
        add_tonal_band(out.vibration[2], ev.onset, ev.duration, a_z, 30.0,
                       180.0, 16, rng, 0.3);
        for (int axis = 0; axis < 2; ++axis) {
          const double a_xy = a_z * rng.uniform(0.2, 0.4);
          add_tonal_band(out.vibration[static_cast<size_t>(axis)], ev.onset,
                         ev.duration, a_xy, 30.0, 180.0, 8, rng, 0.3);
        }
        break;
      }
    }
  }

  for (auto& x : out.audio.samples) x = std::clamp(x, -1.0f, 1.0f);

  // Dropped vibration readings become NaN cells.
  if (config.vib_missing_rate > 0.0) {
    Prng rng(derive_seed(seed, kTagVibDropout));
    for (auto& axis : out.vibration) {
      for (auto& x : axis.samples) {
        if (rng.uniform() < config.vib_missing_rate) {
          x = std::numeric_limits<float>::quiet_NaN();
        }
      }
    }
  }
  return out;
}

LabelingStreams synth_labeling_streams(const Scenario& scenario,
                                       const ScenarioConfig& config) {
  LabelingStreams out;
  out.reed.channel = ChannelId::ReedLevel;
  out.reed.rate = config.reed_rate;
  out.reed.samples.assign(stream_size(config.reed_rate, scenario.length), 0.0f);
  out.current.channel = ChannelId::Current;
  out.current.rate = config.current_rate;
  out.current.samples.assign(stream_size(config.current_rate, scenario.length),
                             0.0f);

  for (const auto& iv : door_intervals(scenario, config)) {
    auto& reed = out.reed.samples;
    const double rate = out.reed.rate;
    const size_t i0 =
        std::min(reed.size(), static_cast<size_t>(std::ceil(iv.open_t * rate)));
    const size_t i1 =
        std::min(reed.size(), static_cast<size_t>(std::ceil(iv.close_t * rate)));
    for (size_t i = i0; i < i1; ++i) reed[i] = 1.0f;
    if (iv.soft_close) {
      const size_t ramp_end = std::min(
          reed.size(),
          static_cast<size_t>(std::ceil((iv.close_t + kReedRampSeconds) * rate)));
      for (size_t i = i1; i < ramp_end; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double level = 1.0 - (t - iv.close_t) / kReedRampSeconds;
        reed[i] = static_cast<float>(std::clamp(level, 0.0, 1.0));
      }
    }
  }

  for (const auto& ev : scenario.events) {
    if (ev.kind != EventKind::WaterBoiled) continue;
    const double on_t = std::max(0.0, ev.onset - config.kettle_heatup_s);
    auto& cur = out.current.samples;
    const double rate = out.current.rate;
    const size_t i0 =
        std::min(cur.size(), static_cast<size_t>(std::ceil(on_t * rate)));
    const size_t i1 =
        std::min(cur.size(), static_cast<size_t>(std::ceil(ev.onset * rate)));
    for (size_t i = i0; i < i1; ++i) {
      cur[i] = static_cast<float>(config.kettle_draw_a);
    }
  }
  return out;
}

}  // namespace evlog
