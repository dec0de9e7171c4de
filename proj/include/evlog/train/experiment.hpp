#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "evlog/nn/checkpoint.hpp"
#include "evlog/nn/model.hpp"
#include "evlog/prep/bundle.hpp"

namespace evlog::train {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double initial_lr = 1e-3;
  int lr_step = 3;
  double lr_gamma = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  int patience = 10;  // early stopping on validation loss
  // Validation-loss improvement below this does not reset the patience
  // counter.
  double min_delta = 1e-4;
  int runs_per_fold = 10;
  bool relu_before_bn = true;
  // The training portion is always oversampled; validation/test only when
  // this is set.
  bool oversample_eval = false;

  void validate() const;
};

struct ConfusionMatrix {
  std::array<std::array<int64_t, 3>, 3> counts = {};  // [true][predicted]

  int64_t total() const;
  int64_t trace() const;
  double accuracy() const { return static_cast<double>(trace()) / static_cast<double>(total()); }
};

// cm[i][j] = #(true == i && predicted == j). Throws on empty or mismatched
// input.
ConfusionMatrix confusion(std::span<const int> predictions,
                          std::span<const int> labels);

struct RunRecord {
  int fold = 0;
  int run = 0;
  uint64_t seed = 0;
  double accuracy = 0.0;
  int epochs_trained = 0;
  bool stopped_early = false;
  bool diverged = false;
  ConfusionMatrix cm;
};

struct FoldReport {
  int fold = 0;  // 1-based, matching the reporting convention
  std::vector<double> accuracies;  // successful runs, in run order
  int failed_runs = 0;
  double min_accuracy = 0.0;
  double median_accuracy = 0.0;  // lower median for even counts
  double max_accuracy = 0.0;
  ConfusionMatrix best_confusion;
  int best_run = -1;
};

struct ExperimentResult {
  std::vector<FoldReport> folds;
  std::vector<RunRecord> records;  // fold-major, run order
  std::optional<nn::Checkpoint> best_checkpoint;
  double best_accuracy = -1.0;
};

// The full cross-validation protocol over one modality bundle: for each of
// the 4 folds, normalize by that fold's training statistics, then for each
// run oversample, train with early stopping, and evaluate once on the
// held-out test set. Deterministic per master seed; runs may execute in
// parallel worker threads, results are merged in fold/run order.
ExperimentResult run_experiment(const prep::FeatureBundle& bundle,
                                const TrainConfig& cfg, uint64_t master_seed,
                                int threads = 0);

double lower_median(std::vector<double> values);

}  // namespace evlog::train
