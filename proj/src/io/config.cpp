#include "evlog/io/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "evlog/error.hpp"
#include "evlog/io/csv.hpp"
#include "evlog/prng.hpp"

namespace evlog::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_string(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       std::string fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') {
    throw ParseError("config key '" + key + "': unparseable number '" +
                     it->second + "'");
  }
  return v;
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0') {
    throw ParseError("config key '" + key + "': unparseable integer '" +
                     it->second + "'");
  }
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "': expected a boolean, got '" +
                   it->second + "'");
}

PipelineConfig load_pipeline_config(const KeyValueConfig& kv) {
  static const std::set<std::string> known = {
      "seed", "paths.out", "paths.scenario",
      "scenario.length_s", "scenario.door_open", "scenario.door_close",
      "scenario.water_boiled", "scenario.min_gap_s",
      "scenario.door_open_duration_s", "scenario.door_close_duration_s",
      "scenario.boil_duration_s", "scenario.kettle_heatup_s",
      "scenario.kettle_draw_a", "scenario.door_dwell_s",
      "scenario.background_dbfs", "scenario.vib_noise_sigma",
      "scenario.vib_missing_rate",
      "logger.buffer_capacity", "logger.adc_poll_period",
      "logger.post_event_window", "logger.spi_clock_hz",
      "logger.spi_efficiency", "logger.current_threshold_a",
      "logger.rtc_epoch",
      "mel.n_mels", "mel.n_fft", "mel.hop_length", "mel.top_db",
      "prep.vib_decimate", "prep.split_seed",
      "train.epochs", "train.batch_size", "train.lr", "train.lr_step",
      "train.lr_gamma", "train.beta1", "train.beta2", "train.eps",
      "train.patience", "train.runs_per_fold", "train.relu_before_bn",
      "train.oversample_eval", "train.threads",
  };
  for (const auto& [key, value] : kv.values()) {
    if (known.count(key) == 0) {
      throw ParseError("unknown config key '" + key + "'");
    }
  }

  PipelineConfig cfg;
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", 42));
  cfg.out_dir = kv.get_string("paths.out", "out");
  if (kv.has("paths.scenario")) {
    cfg.scenario_file = kv.get_string("paths.scenario", "");
  }

  auto& sc = cfg.scenario;
  sc.length_s = kv.get_double("scenario.length_s", sc.length_s);
  sc.door_open_count =
      static_cast<int>(kv.get_int("scenario.door_open", sc.door_open_count));
  sc.door_close_count =
      static_cast<int>(kv.get_int("scenario.door_close", sc.door_close_count));
  sc.water_boiled_count = static_cast<int>(
      kv.get_int("scenario.water_boiled", sc.water_boiled_count));
  sc.min_gap_s = kv.get_double("scenario.min_gap_s", sc.min_gap_s);
  sc.door_open_duration_s =
      kv.get_double("scenario.door_open_duration_s", sc.door_open_duration_s);
  sc.door_close_duration_s =
      kv.get_double("scenario.door_close_duration_s", sc.door_close_duration_s);
  sc.boil_duration_s = kv.get_double("scenario.boil_duration_s", sc.boil_duration_s);
  sc.kettle_heatup_s = kv.get_double("scenario.kettle_heatup_s", sc.kettle_heatup_s);
  sc.kettle_draw_a = kv.get_double("scenario.kettle_draw_a", sc.kettle_draw_a);
  sc.door_dwell_s = kv.get_double("scenario.door_dwell_s", sc.door_dwell_s);
  sc.background_dbfs = kv.get_double("scenario.background_dbfs", sc.background_dbfs);
  sc.vib_noise_sigma = kv.get_double("scenario.vib_noise_sigma", sc.vib_noise_sigma);
  sc.vib_missing_rate = kv.get_double("scenario.vib_missing_rate", sc.vib_missing_rate);

  auto& lg = cfg.logger;
  lg.audio_rate = sc.audio_rate;
  lg.vib_rate = sc.vib_rate;
  lg.buffer_capacity = static_cast<size_t>(
      kv.get_int("logger.buffer_capacity",
                 static_cast<int64_t>(lg.buffer_capacity)));
  lg.adc_poll_period = kv.get_double("logger.adc_poll_period", lg.adc_poll_period);
  lg.post_event_window =
      kv.get_double("logger.post_event_window", lg.post_event_window);
  lg.spi_clock_hz = kv.get_double("logger.spi_clock_hz", lg.spi_clock_hz);
  lg.spi_efficiency = kv.get_double("logger.spi_efficiency", lg.spi_efficiency);
  lg.current_threshold_a =
      kv.get_double("logger.current_threshold_a", lg.current_threshold_a);
  if (kv.has("logger.rtc_epoch")) {
    lg.rtc_epoch_unix = parse_rtc(kv.get_string("logger.rtc_epoch", ""));
  }

  auto& mel = cfg.extract.mel;
  mel.n_mels = static_cast<size_t>(kv.get_int("mel.n_mels", 64));
  mel.n_fft = static_cast<size_t>(kv.get_int("mel.n_fft", 1024));
  mel.hop_length = static_cast<size_t>(kv.get_int("mel.hop_length", 512));
  mel.top_db = kv.get_double("mel.top_db", 80.0);
  mel.sample_rate = sc.audio_rate;
  mel.f_max = sc.audio_rate / 2.0;

  cfg.extract.vib_decimate =
      static_cast<size_t>(kv.get_int("prep.vib_decimate", 32));
  cfg.extract.split_seed = static_cast<uint64_t>(
      kv.get_int("prep.split_seed", static_cast<int64_t>(derive_seed(cfg.seed, 3))));

  auto& tr = cfg.train;
  tr.epochs = static_cast<int>(kv.get_int("train.epochs", tr.epochs));
  tr.batch_size = static_cast<int>(kv.get_int("train.batch_size", tr.batch_size));
  tr.initial_lr = kv.get_double("train.lr", tr.initial_lr);
  tr.lr_step = static_cast<int>(kv.get_int("train.lr_step", tr.lr_step));
  tr.lr_gamma = kv.get_double("train.lr_gamma", tr.lr_gamma);
  tr.beta1 = kv.get_double("train.beta1", tr.beta1);
  tr.beta2 = kv.get_double("train.beta2", tr.beta2);
  tr.adam_eps = kv.get_double("train.eps", tr.adam_eps);
  tr.patience = static_cast<int>(kv.get_int("train.patience", tr.patience));
  tr.runs_per_fold =
      static_cast<int>(kv.get_int("train.runs_per_fold", tr.runs_per_fold));
  tr.relu_before_bn = kv.get_bool("train.relu_before_bn", tr.relu_before_bn);
  tr.oversample_eval = kv.get_bool("train.oversample_eval", tr.oversample_eval);
  cfg.threads = static_cast<int>(kv.get_int("train.threads", 0));

  return cfg;
}

}  // namespace evlog::io
