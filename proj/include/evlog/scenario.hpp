#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evlog/stream.hpp"

namespace evlog {

enum class EventKind : uint8_t { DoorOpen, DoorClose, WaterBoiled };

const char* event_label(EventKind kind);  // door_open / door_close / water_boiled
EventKind event_from_label(const std::string& label);  // throws ParseError

struct EventSpec {
  EventKind kind;
  double onset = 0.0;     // seconds from scenario start
  double duration = 0.0;  // seconds, > 0

  friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

struct Scenario {
  uint64_t seed = 0;
  double length = 0.0;  // seconds
  std::vector<EventSpec> events;             // sorted by onset
  std::array<int, 3> class_counts = {0, 0, 0};  // indexed by EventKind

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ScenarioConfig {
  double length_s = 2400.0;
  int door_open_count = 40;
  int door_close_count = 29;
  int water_boiled_count = 37;

  // Must exceed the logger's post-event continuation window so recordings
  // never overlap; default is twice the 1.5 s default window.
  double min_gap_s = 3.0;

  double door_open_duration_s = 0.3;
  double door_close_duration_s = 0.8;
  double boil_duration_s = 5.0;

  // Kettle switch-on precedes each WaterBoiled onset by this heat-up time.
  double kettle_heatup_s = 30.0;
  double kettle_draw_a = 5.0;
  // Hold time before an unpaired DoorOpen's door drifts shut again.
  double door_dwell_s = 5.0;

  double audio_rate = 16000.0;
  double vib_rate = 4000.0;
  double reed_rate = 1000.0;
  double current_rate = 1000.0;

  double background_dbfs = -40.0;  // audio noise floor
  double vib_noise_sigma = 0.002;
  // Probability that a vibration reading is dropped (missing CSV cell).
  double vib_missing_rate = 0.0;
};

// Deterministic ground-truth timeline with the requested per-class counts.
// Throws ConfigError when the events cannot be packed into length_s with
// the required gaps, or when counts are inherently invalid
// (door_close_count > door_open_count: a close needs a preceding open).
Scenario build_scenario(const ScenarioConfig& config, uint64_t seed);

struct FeatureStreams {
  SampleStream audio;                    // 16 kHz mono in [-1, 1]
  std::array<SampleStream, 3> vibration;  // 4 kHz x/y/z
};

struct LabelingStreams {
  SampleStream reed;     // door state level
  SampleStream current;  // kettle draw, amperes
};

FeatureStreams synth_feature_streams(const Scenario& scenario,
                                     const ScenarioConfig& config,
                                     uint64_t seed);

LabelingStreams synth_labeling_streams(const Scenario& scenario,
                                       const ScenarioConfig& config);

// Text form: "# length_s <v>" metadata line, then one "kind,onset_s,duration_s"
// line per event. The CLI both emits and accepts this format.
void write_scenario(std::ostream& out, const Scenario& scenario);
Scenario read_scenario(std::istream& in);

}  // namespace evlog
