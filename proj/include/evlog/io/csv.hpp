#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evlog/scenario.hpp"

namespace evlog::io {

// RTC timestamps: seconds since the Unix epoch, microsecond resolution,
// rendered ISO-8601 UTC ("2024-05-01T10:00:03.250000Z"; the fraction is
// omitted when zero).
std::string format_rtc(double unix_seconds);
double parse_rtc(const std::string& iso);  // throws ParseError

struct VibRow {
  double t = 0.0;  // seconds since the recording started
  // NaN marks a missing cell.
  float x = 0.0f, y = 0.0f, z = 0.0f;
};

// Vibration CSV: "t,ax,ay,az" header, 5-decimal timestamps (exact for the
// 4 kHz grid), acceleration values at 6 significant digits, empty cells for
// missing readings.
class VibCsvWriter {
 public:
  explicit VibCsvWriter(const std::filesystem::path& path);
  void append(const VibRow& row);
  void finalize();
  bool finalized() const { return finalized_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool finalized_ = false;
};

std::string write_vibration_csv(const std::vector<VibRow>& rows);
std::vector<VibRow> read_vibration_csv(const std::string& text);
std::vector<VibRow> read_vibration_csv_file(const std::filesystem::path& path);

struct LabelRow {
  double rtc_seconds = 0.0;  // Unix seconds
  EventKind kind = EventKind::DoorOpen;
};

// Label CSV: one "iso8601,label" row per event, no header.
class LabelCsvWriter {
 public:
  explicit LabelCsvWriter(const std::filesystem::path& path);
  void append(const LabelRow& row);
  void finalize();
  bool finalized() const { return finalized_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool finalized_ = false;
};

std::string write_label_csv(const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_label_csv(const std::string& text);
std::vector<LabelRow> read_label_csv_file(const std::filesystem::path& path);

}  // namespace evlog::io
