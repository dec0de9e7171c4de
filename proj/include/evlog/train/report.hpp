#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evlog/train/experiment.hpp"

namespace evlog::train {

// results CSV: one row per run,
// "fold,run,seed,accuracy,epochs_trained,stopped_early" (+diverged flag).
void write_results_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records);
std::vector<RunRecord> read_results_csv(const std::filesystem::path& path);

// 3x3 confusion CSV with labeled rows/columns (rows = true class).
void write_confusion_csv(const std::filesystem::path& path,
                         const ConfusionMatrix& cm);
ConfusionMatrix read_confusion_csv(const std::filesystem::path& path);

// Rebuilds fold statistics from raw run records (used by the report command
// so the summary always matches the CSV on disk).
std::vector<FoldReport> fold_reports_from_records(
    const std::vector<RunRecord>& records);

// Human-readable per-fold min/median/max table (percent, two decimals) plus
// the best run and its confusion matrix.
std::string summarize_text(const std::string& modality,
                           const std::vector<FoldReport>& folds);
// Machine-readable equivalent.
std::string summarize_json(const std::string& modality,
                           const std::vector<FoldReport>& folds);

std::string format_percent(double fraction);  // "91.67"

}  // namespace evlog::train
