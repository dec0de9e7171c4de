#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evlog/nn/model.hpp"

namespace evlog::nn {

// Self-contained model snapshot: architecture, parameters, batch-norm
// running statistics, plus the per-channel normalization applied to inputs
// and the vibration decimation factor, so inference needs nothing else.
struct Checkpoint {
  CnnConfig config;
  std::vector<double> blobs;  // all parameter/running arrays, concatenated
  std::vector<double> norm_mean;
  std::vector<double> norm_std;
  std::string modality;
  uint32_t vib_decimate = 1;
};

Checkpoint snapshot_model(const Cnn1d& model, const std::vector<double>& mean,
                          const std::vector<double>& stddev,
                          const std::string& modality, uint32_t vib_decimate);

// Restores parameters/running stats into a freshly constructed model.
Cnn1d restore_model(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evlog::nn
