#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evlog/scenario.hpp"
#include "evlog/sim/pingpong.hpp"
#include "evlog/stream.hpp"

namespace evlog::sim {

struct LoggerConfig {
  double audio_rate = 16000.0;
  double vib_rate = 4000.0;
  // Samples (audio) / frames (vibration) per ping or pong buffer.
  size_t buffer_capacity = 2048;
  double adc_poll_period = 0.01;   // seconds
  double post_event_window = 1.5;  // seconds of recording kept after a flag
  double spi_clock_hz = 50e6;
  // Protocol overhead: effective writer throughput is spi_clock/8 * this.
  double spi_efficiency = 0.8;
  double current_threshold_a = 0.0;
  double rtc_epoch_unix = 1714557600.0;  // 2024-05-01T10:00:00Z

  double writer_bytes_per_s() const {
    return spi_clock_hz / 8.0 * spi_efficiency;
  }
  // Raw acquisition byte rate: 16-bit audio samples plus 3x16-bit vibration
  // frames.
  double acquisition_bytes_per_s() const {
    return audio_rate * 2.0 + vib_rate * 6.0;
  }
  void validate() const;  // throws ConfigError
};

enum class FlagSource : uint8_t { EdgeInterrupt, AdcThreshold };
enum class ReedEdge : uint8_t { Rising, Falling };

struct EventFlag {
  EventKind kind;
  double raised_at = 0.0;  // seconds from scenario start
  FlagSource source = FlagSource::EdgeInterrupt;
};

// Rising -> DoorOpen, Falling -> DoorClose, stamped with the edge time.
EventFlag on_reed_edge(ReedEdge edge, double t);

// Latches the kettle cycle: arms while current exceeds the threshold and
// raises WaterBoiled once on the drop back to <= threshold.
class AdcMonitor {
 public:
  explicit AdcMonitor(double threshold) : threshold_(threshold) {}
  std::optional<EventFlag> poll(double current_a, double t);

 private:
  double threshold_;
  bool armed_ = false;
};

// Modeled SD writer: a single FIFO channel draining at writer_bytes_per_s.
class StorageModel {
 public:
  explicit StorageModel(double bytes_per_s) : bytes_per_s_(bytes_per_s) {}

  // Returns the completion time of a transfer submitted at time t.
  double submit(double t, double bytes);

  double backlog_highwater_bytes() const { return backlog_highwater_; }

 private:
  double bytes_per_s_;
  double busy_until_ = 0.0;
  double backlog_highwater_ = 0.0;
};

// Open-file accounting for the simulated FatFs layer (4-handle limit).
class FileRegistry {
 public:
  void opened(const std::string& what);
  void closed();
  int open_now() const { return open_; }
  int highwater() const { return highwater_; }

 private:
  int open_ = 0;
  int highwater_ = 0;
};

struct SessionArtifacts {
  int index = 0;
  std::filesystem::path audio_path;
  std::filesystem::path vibration_path;
  std::filesystem::path label_path;  // shared run-level label file
  double t_begin = 0.0;
  double t_end = 0.0;
  uint64_t audio_begin = 0, audio_end = 0;  // global sample index range
  uint64_t vib_begin = 0, vib_end = 0;      // global frame index range
  std::vector<EventFlag> labels;            // flags recorded in this session
};

struct SimFaultRecord {
  std::string what;
  double time = 0.0;
};

struct RunResult {
  std::vector<SessionArtifacts> sessions;
  std::vector<EventFlag> labels;  // run-level, in emission order
  // Virtual time each label was written (always a DMA-completion checkpoint).
  std::vector<double> label_check_times;
  std::vector<SimFaultRecord> faults;
  double audio_buffer_highwater = 0.0;  // max fill fraction observed
  double vib_buffer_highwater = 0.0;
  double storage_backlog_highwater_bytes = 0.0;
  int max_open_files = 0;
  std::filesystem::path label_csv;
  std::filesystem::path report_path;

  bool ok() const { return faults.empty(); }
};

// Runs the firmware main-loop model over the given streams, writing one WAV
// + vibration CSV per event session plus a shared label CSV and a JSON run
// report under out_dir. Deterministic for identical inputs.
RunResult run_simulation(const FeatureStreams& features,
                         const LabelingStreams& labeling,
                         const LoggerConfig& config,
                         const std::filesystem::path& out_dir);

}  // namespace evlog::sim
