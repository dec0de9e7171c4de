#include "evlog/train/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "evlog/error.hpp"

namespace evlog::train {

namespace {

const char* kClassNames[3] = {"door_open", "door_close", "water_boiled"};

}  // namespace

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write results CSV: " + path.string());
  out << "fold,run,seed,accuracy,epochs_trained,stopped_early,diverged\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%d,%llu,%.17g,%d,%d,%d\n", r.fold, r.run,
                  static_cast<unsigned long long>(r.seed), r.accuracy,
                  r.epochs_trained, r.stopped_early ? 1 : 0, r.diverged ? 1 : 0);
    out << buf;
  }
}

std::vector<RunRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open results CSV: " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || lineno == 1) continue;  // header
    RunRecord r;
    unsigned long long seed = 0;
    int early = 0, diverged = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%llu,%lf,%d,%d,%d", &r.fold, &r.run,
                    &seed, &r.accuracy, &r.epochs_trained, &early,
                    &diverged) != 7) {
      throw ParseError(path.string() + ": row " + std::to_string(lineno) +
                       ": expected 7 fields");
    }
    r.seed = seed;
    r.stopped_early = early != 0;
    r.diverged = diverged != 0;
    records.push_back(r);
  }
  return records;
}

void write_confusion_csv(const std::filesystem::path& path,
                         const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write confusion CSV: " + path.string());
  out << "true\\pred";
  for (const auto* name : kClassNames) out << ',' << name;
  out << '\n';
  for (size_t i = 0; i < 3; ++i) {
    out << kClassNames[i];
    for (size_t j = 0; j < 3; ++j) out << ',' << cm.counts[i][j];
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open confusion CSV: " + path.string());
  ConfusionMatrix cm;
  std::string line;
  std::getline(in, line);  // header
  for (size_t i = 0; i < 3; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(path.string() + ": truncated confusion matrix");
    }
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // class name
    for (size_t j = 0; j < 3; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw ParseError(path.string() + ": truncated confusion row");
      }
      cm.counts[i][j] = std::stoll(cell);
    }
  }
  return cm;
}

std::vector<FoldReport> fold_reports_from_records(
    const std::vector<RunRecord>& records) {
  std::map<int, std::vector<RunRecord>> by_fold;
  for (const auto& r : records) by_fold[r.fold].push_back(r);
  std::vector<FoldReport> folds;
  for (auto& [fold, recs] : by_fold) {
    std::sort(recs.begin(), recs.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.run < b.run; });
    FoldReport report;
    report.fold = fold;
    for (const auto& r : recs) {
      if (r.diverged) {
        report.failed_runs += 1;
        continue;
      }
      report.accuracies.push_back(r.accuracy);
      if (report.best_run < 0 || r.accuracy > recs[static_cast<size_t>(
                                     report.best_run)].accuracy) {
        report.best_run = r.run;
      }
    }
    if (!report.accuracies.empty()) {
      report.min_accuracy =
          *std::min_element(report.accuracies.begin(), report.accuracies.end());
      report.max_accuracy =
          *std::max_element(report.accuracies.begin(), report.accuracies.end());
      report.median_accuracy = lower_median(report.accuracies);
      for (const auto& r : recs) {
        if (r.run == report.best_run) report.best_confusion = r.cm;
      }
    }
    folds.push_back(std::move(report));
  }
  return folds;
}

std::string summarize_text(const std::string& modality,
                           const std::vector<FoldReport>& folds) {
  std::ostringstream out;
  out << "Test accuracy (%) across folds [" << modality << "]\n";
  out << "fold    min   median      max   runs  failed\n";
  double best = -1.0;
  int best_fold = -1;
  for (const auto& f : folds) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%4d %6s %8s %8s %6zu %7d\n", f.fold,
                  format_percent(f.min_accuracy).c_str(),
                  format_percent(f.median_accuracy).c_str(),
                  format_percent(f.max_accuracy).c_str(), f.accuracies.size(),
                  f.failed_runs);
    out << buf;
    if (f.max_accuracy > best) {
      best = f.max_accuracy;
      best_fold = f.fold;
    }
  }
  if (best_fold >= 0) {
    out << "best run: fold " << best_fold << ", accuracy "
        << format_percent(best) << "%\n";
    for (const auto& f : folds) {
      if (f.fold != best_fold) continue;
      out << "confusion matrix of the best run (rows = true class):\n";
      for (size_t i = 0; i < 3; ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "  %-12s %4lld %4lld %4lld\n",
                      kClassNames[i],
                      static_cast<long long>(f.best_confusion.counts[i][0]),
                      static_cast<long long>(f.best_confusion.counts[i][1]),
                      static_cast<long long>(f.best_confusion.counts[i][2]));
        out << buf;
      }
    }
  }
  return out.str();
}

std::string summarize_json(const std::string& modality,
                           const std::vector<FoldReport>& folds) {
  nlohmann::json j;
  j["modality"] = modality;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json cm = nlohmann::json::array();
    for (const auto& row : f.best_confusion.counts) {
      cm.push_back({row[0], row[1], row[2]});
    }
    j["folds"].push_back({
        {"fold", f.fold},
        {"min", f.min_accuracy},
        {"median", f.median_accuracy},
        {"max", f.max_accuracy},
        {"min_pct", format_percent(f.min_accuracy)},
        {"median_pct", format_percent(f.median_accuracy)},
        {"max_pct", format_percent(f.max_accuracy)},
        {"runs", f.accuracies.size()},
        {"failed_runs", f.failed_runs},
        {"best_run", f.best_run},
        {"best_confusion", cm},
    });
  }
  return j.dump(2);
}

}  // namespace evlog::train
