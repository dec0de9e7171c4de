#include "evlog/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "evlog/error.hpp"
#include "evlog/prng.hpp"

namespace evlog {

namespace {

// Substream tags so scenario layout, waveforms and dropout draw from
// decorrelated generators.
constexpr uint64_t kTagLayout = 0x11;

// Reed "soft close": an unpaired DoorOpen drifts shut after the dwell time.
// The level decays over this ramp instead of stepping, so the transition is
// below any edge detector's slew threshold and raises no interrupt.
constexpr double kReedRampSeconds = 0.064;
constexpr double kSoloTailMargin = 0.1;

struct Unit {
  // footprint is the exclusive time claim of the unit (for boils it starts
  // at kettle-on); events are offsets from footprint start.
  double footprint_len = 0.0;
  std::vector<std::pair<double, EventSpec>> events;  // (offset, event proto)
};

void validate_config(const ScenarioConfig& c) {
  if (c.length_s <= 0.0) throw ConfigError("scenario length must be positive");
  if (c.door_open_count < 0 || c.door_close_count < 0 ||
      c.water_boiled_count < 0) {
    throw ConfigError("event counts must be non-negative");
  }
  if (c.door_close_count > c.door_open_count) {
    throw ConfigError(
        "door_close_count exceeds door_open_count: a door must be opened "
        "before it can be closed");
  }
  if (c.min_gap_s <= 0.0) throw ConfigError("min_gap_s must be positive");
  if (c.door_open_duration_s <= 0.0 || c.door_close_duration_s <= 0.0 ||
      c.boil_duration_s <= 0.0) {
    throw ConfigError("event durations must be positive");
  }
  if (c.door_close_duration_s <= c.door_open_duration_s) {
    throw ConfigError(
        "door_close_duration_s must exceed door_open_duration_s");
  }
  if (c.kettle_heatup_s < 0.0) throw ConfigError("kettle_heatup_s must be >= 0");
  if (c.door_dwell_s <= 0.0) throw ConfigError("door_dwell_s must be positive");
  if (c.audio_rate <= 0.0 || c.vib_rate <= 0.0 || c.reed_rate <= 0.0 ||
      c.current_rate <= 0.0) {
    throw ConfigError("sample rates must be positive");
  }
  if (c.vib_missing_rate < 0.0 || c.vib_missing_rate >= 1.0) {
    throw ConfigError("vib_missing_rate must be in [0, 1)");
  }
}

}  // namespace

const char* event_label(EventKind kind) {
  switch (kind) {
    case EventKind::DoorOpen: return "door_open";
    case EventKind::DoorClose: return "door_close";
    case EventKind::WaterBoiled: return "water_boiled";
  }
  return "unknown";
}

EventKind event_from_label(const std::string& label) {
  if (label == "door_open") return EventKind::DoorOpen;
  if (label == "door_close") return EventKind::DoorClose;
  if (label == "water_boiled") return EventKind::WaterBoiled;
  throw ParseError("unknown event label '" + label +
                   "' (valid: door_open, door_close, water_boiled)");
}

Scenario build_scenario(const ScenarioConfig& config, uint64_t seed) {
  validate_config(config);
  Prng rng(derive_seed(seed, kTagLayout));

  const int pairs = config.door_close_count;
  const int solo_opens = config.door_open_count - config.door_close_count;
  const int boils = config.water_boiled_count;

  std::vector<Unit> units;
  units.reserve(static_cast<size_t>(pairs + solo_opens + boils));

  for (int i = 0; i < pairs; ++i) {
    // The door stays open between the pair's onsets; the hold keeps the two
    // recording sessions from overlapping.
    const double hold = config.min_gap_s + config.door_open_duration_s +
                        rng.uniform(0.5, 4.0);
    Unit u;
    u.footprint_len = hold + config.door_close_duration_s;
    u.events.push_back(
        {0.0, {EventKind::DoorOpen, 0.0, config.door_open_duration_s}});
    u.events.push_back(
        {hold, {EventKind::DoorClose, 0.0, config.door_close_duration_s}});
    units.push_back(std::move(u));
  }
  for (int i = 0; i < solo_opens; ++i) {
    Unit u;
    u.footprint_len =
        std::max(config.door_open_duration_s,
                 config.door_dwell_s + kReedRampSeconds + kSoloTailMargin);
    u.events.push_back(
        {0.0, {EventKind::DoorOpen, 0.0, config.door_open_duration_s}});
    units.push_back(std::move(u));
  }
  for (int i = 0; i < boils; ++i) {
    Unit u;
    u.footprint_len = config.kettle_heatup_s + config.boil_duration_s;
    u.events.push_back({config.kettle_heatup_s,
                        {EventKind::WaterBoiled, 0.0, config.boil_duration_s}});
    units.push_back(std::move(u));
  }

  rng.shuffle(units.data(), units.size());

  const size_t n = units.size();
  const double margin_front = std::max(config.min_gap_s, 2.0);
  const double margin_back = config.min_gap_s + 4.0;
  double required = margin_front + margin_back;
  for (const auto& u : units) required += u.footprint_len;
  if (n > 1) required += config.min_gap_s * static_cast<double>(n - 1);
  if (required > config.length_s) {
    std::ostringstream msg;
    msg << "infeasible packing: " << n << " events need at least " << required
        << " s but scenario length is " << config.length_s << " s";
    throw ConfigError(msg.str());
  }

  // Spread the slack over the inter-unit gaps with random weights.
  const double slack = config.length_s - required;
  std::vector<double> weights(n + 1, 0.0);
  double weight_sum = 0.0;
  for (auto& w : weights) {
    w = rng.uniform();
    weight_sum += w;
  }

  Scenario scenario;
  scenario.seed = seed;
  scenario.length = config.length_s;

  double cursor = margin_front;
  for (size_t j = 0; j < n; ++j) {
    cursor += weight_sum > 0.0 ? slack * weights[j] / weight_sum : 0.0;
    if (j > 0) cursor += config.min_gap_s;
    for (const auto& [offset, proto] : units[j].events) {
      EventSpec ev = proto;
      ev.onset = cursor + offset;
      scenario.events.push_back(ev);
    }
    cursor += units[j].footprint_len;
  }

  std::sort(scenario.events.begin(), scenario.events.end(),
            [](const EventSpec& a, const EventSpec& b) {
              return a.onset < b.onset;
            });
  for (const auto& ev : scenario.events) {
    scenario.class_counts[static_cast<size_t>(ev.kind)] += 1;
  }
  return scenario;
}

void write_scenario(std::ostream& out, const Scenario& scenario) {
  out << "# evlog scenario\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "# length_s %.6f\n", scenario.length);
  out << buf;
  out << "# seed " << scenario.seed << "\n";
  for (const auto& ev : scenario.events) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", event_label(ev.kind),
                  ev.onset, ev.duration);
    out << buf;
  }
}

Scenario read_scenario(std::istream& in) {
  Scenario scenario;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "length_s") meta >> scenario.length;
      if (key == "seed") meta >> scenario.seed;
      continue;
    }
    std::istringstream row(line);
    std::string kind_str, onset_str, dur_str;
    if (!std::getline(row, kind_str, ',') ||
        !std::getline(row, onset_str, ',') || !std::getline(row, dur_str)) {
      throw ParseError("scenario line " + std::to_string(lineno) +
                       ": expected 'kind,onset_s,duration_s'");
    }
    EventSpec ev;
    ev.kind = event_from_label(kind_str);
    try {
      ev.onset = std::stod(onset_str);
      ev.duration = std::stod(dur_str);
    } catch (const std::exception&) {
      throw ParseError("scenario line " + std::to_string(lineno) +
                       ": unparseable number");
    }
    if (ev.onset < 0.0 || ev.duration <= 0.0) {
      throw ParseError("scenario line " + std::to_string(lineno) +
                       ": onset must be >= 0 and duration > 0");
    }
    scenario.events.push_back(ev);
    scenario.class_counts[static_cast<size_t>(ev.kind)] += 1;
  }
  if (!std::is_sorted(scenario.events.begin(), scenario.events.end(),
                      [](const EventSpec& a, const EventSpec& b) {
                        return a.onset < b.onset;
                      })) {
    throw ParseError("scenario events must be sorted by onset");
  }
  if (scenario.length <= 0.0 && !scenario.events.empty()) {
    const auto& last = scenario.events.back();
    scenario.length = last.onset + last.duration + 8.0;
  }
  for (const auto& ev : scenario.events) {
    if (ev.onset + ev.duration > scenario.length) {
      throw ParseError("event at " + std::to_string(ev.onset) +
                       " s extends past scenario length");
    }
  }
  return scenario;
}

}  // namespace evlog
