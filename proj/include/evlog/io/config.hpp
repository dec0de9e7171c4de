#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "evlog/dsp/mel.hpp"
#include "evlog/prep/bundle.hpp"
#include "evlog/scenario.hpp"
#include "evlog/sim/logger.hpp"
#include "evlog/train/experiment.hpp"

namespace evlog::io {

// Flat "section.key = value" file; '#' starts a comment. Unknown keys are
// rejected by the pipeline loader so typos fail loudly.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Everything one pipeline invocation needs, single source of truth for all
// stages. Flags override file values.
struct PipelineConfig {
  uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> scenario_file;

  ScenarioConfig scenario;
  sim::LoggerConfig logger;
  prep::ExtractConfig extract;
  train::TrainConfig train;
  int threads = 0;  // 0: hardware concurrency

  std::filesystem::path sim_dir() const { return out_dir / "sim"; }
  std::filesystem::path features_dir() const { return out_dir / "features"; }
  std::filesystem::path results_dir() const { return out_dir / "results"; }
};

PipelineConfig load_pipeline_config(const KeyValueConfig& kv);

}  // namespace evlog::io
