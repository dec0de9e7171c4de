#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evlog/dsp/mel.hpp"
#include "evlog/io/csv.hpp"

namespace evlog::prep {

// Symmetric zero-padding to the longest signal: floor(d/2) left, ceil(d/2)
// right. Throws ConfigError on an empty collection.
std::vector<std::vector<float>> pad_to_max(
    const std::vector<std::vector<float>>& signals);

// One recording's vibration triplets; NaN cells are missing readings.
struct VibRecording {
  std::vector<float> x, y, z;
};

// Replaces each missing cell with the mean of the non-missing values of the
// same axis of the same recording. Throws ConfigError naming the recording
// and axis when an axis is entirely missing.
VibRecording impute_missing(const VibRecording& rec, size_t recording_index = 0);

// Average-pool decimation along time (tail samples fold into the last bin).
std::vector<float> decimate_mean(const std::vector<float>& signal, size_t factor);

// Envelope decimation: mean of |x| per bin. Keeps burst duration and
// amplitude visible after the rate reduction, which plain averaging cancels
// for zero-mean broadband transients.
std::vector<float> decimate_abs_mean(const std::vector<float>& signal,
                                     size_t factor);

struct SplitPlan {
  std::vector<size_t> test;
  std::array<std::vector<size_t>, 4> folds;  // partition of train+validation

  std::vector<size_t> train_validation() const;
  // CV view: fold k validates, the other three train.
  std::vector<size_t> fold_train(size_t k) const;
  const std::vector<size_t>& fold_validation(size_t k) const { return folds[k]; }
};

// Stratified 3:1:1 split (largest-remainder rounding per class; ties go to
// the earlier of train/validation/test) plus stratified 4-fold assignment
// over train+validation. Deterministic per seed. Requires >= 5 samples per
// class.
SplitPlan split_dataset(const std::vector<int>& labels, uint64_t seed);

// Raises every class to the majority count by sampling with replacement;
// every original index is kept.
std::vector<size_t> oversample(const std::vector<size_t>& indices,
                               const std::vector<int>& labels, uint64_t seed);

// Per-channel standardization statistics, fit on a training subset.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

}  // namespace evlog::prep
