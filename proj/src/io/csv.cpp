#include "evlog/io/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "evlog/error.hpp"

namespace evlog::io {

namespace {

// Proleptic Gregorian calendar <-> days since 1970-01-01 (Howard Hinnant's
// algorithms), so timestamp handling does not depend on libc time zones.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) y += 1;
}

double parse_double_field(const std::string& field, size_t row,
                          const char* what) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError("row " + std::to_string(row) + ": unparseable " + what +
                     " '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

void format_vib_row(char* buf, size_t cap, const VibRow& row) {
  char cell[3][32];
  const float vals[3] = {row.x, row.y, row.z};
  for (int i = 0; i < 3; ++i) {
    if (std::isnan(vals[i])) {
      cell[i][0] = '\0';
    } else {
      std::snprintf(cell[i], sizeof cell[i], "%.6g",
                    static_cast<double>(vals[i]));
    }
  }
  std::snprintf(buf, cap, "%.5f,%s,%s,%s\n", row.t, cell[0], cell[1], cell[2]);
}

constexpr const char* kVibHeader = "t,ax,ay,az\n";

}  // namespace

std::string format_rtc(double unix_seconds) {
  double whole = std::floor(unix_seconds);
  auto micros = static_cast<int64_t>(std::llround((unix_seconds - whole) * 1e6));
  if (micros >= 1000000) {
    micros -= 1000000;
    whole += 1.0;
  }
  const auto total = static_cast<int64_t>(whole);
  int64_t days = total / 86400;
  int64_t sod = total % 86400;
  if (sod < 0) {
    sod += 86400;
    days -= 1;
  }
  int64_t year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  const int hh = static_cast<int>(sod / 3600);
  const int mm = static_cast<int>((sod % 3600) / 60);
  const int ss = static_cast<int>(sod % 60);
  char buf[64];
  if (micros == 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<long long>(year), month, day, hh, mm, ss);
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%06lldZ",
                  static_cast<long long>(year), month, day, hh, mm, ss,
                  static_cast<long long>(micros));
  }
  return buf;
}

double parse_rtc(const std::string& iso) {
  int year = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0;
  int n = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%d%n", &year, &month, &day, &hh,
                  &mm, &ss, &n) != 6) {
    throw ParseError("bad ISO-8601 timestamp '" + iso + "'");
  }
  size_t pos = static_cast<size_t>(n);
  double frac = 0.0;
  if (pos < iso.size() && iso[pos] == '.') {
    size_t fp = pos + 1;
    double scale = 0.1;
    while (fp < iso.size() && iso[fp] >= '0' && iso[fp] <= '9') {
      frac += (iso[fp] - '0') * scale;
      scale *= 0.1;
      ++fp;
    }
    if (fp == pos + 1) throw ParseError("bad fractional seconds in '" + iso + "'");
    pos = fp;
  }
  if (pos + 1 != iso.size() || iso[pos] != 'Z') {
    throw ParseError("ISO-8601 timestamp must be UTC ('Z'): '" + iso + "'");
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 ||
      ss > 60) {
    throw ParseError("out-of-range field in timestamp '" + iso + "'");
  }
  const int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                       static_cast<unsigned>(day));
  return static_cast<double>(days * 86400 + hh * 3600 + mm * 60 + ss) + frac;
}

VibCsvWriter::VibCsvWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::trunc);
  if (!out_) {
    throw ParseError("cannot open vibration CSV for writing: " + path.string());
  }
  out_ << kVibHeader;
}

void VibCsvWriter::append(const VibRow& row) {
  char buf[160];
  format_vib_row(buf, sizeof buf, row);
  out_ << buf;
}

void VibCsvWriter::finalize() {
  if (finalized_) return;
  out_.close();
  finalized_ = true;
}

std::string write_vibration_csv(const std::vector<VibRow>& rows) {
  std::string text = kVibHeader;
  char buf[160];
  for (const auto& row : rows) {
    format_vib_row(buf, sizeof buf, row);
    text += buf;
  }
  return text;
}

std::vector<VibRow> read_vibration_csv(const std::string& text) {
  std::vector<VibRow> rows;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;  // first line is the header row
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ParseError("row " + std::to_string(lineno) + ": expected 4 cells, got " +
                       std::to_string(fields.size()));
    }
    VibRow row;
    row.t = parse_double_field(fields[0], lineno, "timestamp");
    if (row.t < prev_t) {
      throw ParseError("row " + std::to_string(lineno) +
                       ": timestamps must be nondecreasing");
    }
    prev_t = row.t;
    float* cells[3] = {&row.x, &row.y, &row.z};
    const char* names[3] = {"ax", "ay", "az"};
    for (int i = 0; i < 3; ++i) {
      if (fields[static_cast<size_t>(i) + 1].empty()) {
        *cells[i] = std::numeric_limits<float>::quiet_NaN();
      } else {
        *cells[i] = static_cast<float>(parse_double_field(
            fields[static_cast<size_t>(i) + 1], lineno, names[i]));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<VibRow> read_vibration_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vibration CSV: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return read_vibration_csv(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

LabelCsvWriter::LabelCsvWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::trunc);
  if (!out_) {
    throw ParseError("cannot open label CSV for writing: " + path.string());
  }
}

void LabelCsvWriter::append(const LabelRow& row) {
  out_ << format_rtc(row.rtc_seconds) << ',' << event_label(row.kind) << '\n';
  out_.flush();
}

void LabelCsvWriter::finalize() {
  if (finalized_) return;
  out_.close();
  finalized_ = true;
}

std::string write_label_csv(const std::vector<LabelRow>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += format_rtc(row.rtc_seconds);
    text += ',';
    text += event_label(row.kind);
    text += '\n';
  }
  return text;
}

std::vector<LabelRow> read_label_csv(const std::string& text) {
  std::vector<LabelRow> rows;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) {
      throw ParseError("row " + std::to_string(lineno) +
                       ": expected 'timestamp,label'");
    }
    LabelRow row;
    try {
      row.rtc_seconds = parse_rtc(fields[0]);
      row.kind = event_from_label(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError("row " + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<LabelRow> read_label_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open label CSV: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return read_label_csv(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace evlog::io
