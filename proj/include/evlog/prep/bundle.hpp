#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evlog/dsp/mel.hpp"
#include "evlog/nn/tensor.hpp"
#include "evlog/prep/preprocess.hpp"

namespace evlog::prep {

// Extracted features for one modality, with enough provenance to retrain or
// re-evaluate without touching the session files again. On disk this is a
// raw little-endian float32 array plus a JSON sidecar.
struct FeatureBundle {
  std::string modality;  // "audio" | "vibration"
  nn::Tensor3 data;      // batch x channel x time, unnormalized
  std::vector<int> labels;
  std::vector<std::string> sources;
  SplitPlan split;
  uint64_t split_seed = 0;
  dsp::MelConfig mel;     // audio only
  size_t vib_decimate = 1;  // vibration only
};

void save_bundle(const std::filesystem::path& dir, const FeatureBundle& bundle);
FeatureBundle load_bundle(const std::filesystem::path& dir,
                          const std::string& modality);

// Standardization fit on the given items, per channel over (item, time).
// Throws ConfigError naming the channel when one has zero variance.
ChannelStats fit_stats(const nn::Tensor3& data,
                       const std::vector<size_t>& items);
// (x - mean) / std per channel, over every item.
nn::Tensor3 apply_normalize(const nn::Tensor3& data, const ChannelStats& stats);

struct ExtractConfig {
  dsp::MelConfig mel;
  size_t vib_decimate = 32;  // 8 ms envelope bins at 4 kHz
  uint64_t split_seed = 1;
};

struct ExtractResult {
  FeatureBundle audio;
  FeatureBundle vibration;
};

// Reads a simulation output tree (sessions/ + labels.csv), imputes and pads,
// extracts mel spectrograms (audio) and decimated waveforms (vibration),
// and splits by label. Sessions and label rows must correspond 1:1.
ExtractResult extract_features(const std::filesystem::path& sim_dir,
                               const ExtractConfig& cfg);

}  // namespace evlog::prep
