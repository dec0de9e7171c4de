#include "evlog/prep/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evlog/error.hpp"
#include "evlog/prng.hpp"

namespace evlog::prep {

std::vector<std::vector<float>> pad_to_max(
    const std::vector<std::vector<float>>& signals) {
  if (signals.empty()) throw ConfigError("pad_to_max: empty collection");
  size_t longest = 0;
  for (const auto& s : signals) longest = std::max(longest, s.size());
  std::vector<std::vector<float>> out;
  out.reserve(signals.size());
  for (const auto& s : signals) {
    const size_t d = longest - s.size();
    const size_t left = d / 2;
    std::vector<float> padded(longest, 0.0f);
    std::copy(s.begin(), s.end(), padded.begin() + static_cast<long>(left));
    out.push_back(std::move(padded));
  }
  return out;
}

namespace {

void impute_axis(std::vector<float>& v, size_t recording_index,
                 const char* axis) {
  double total = 0.0;
  size_t present = 0;
  for (const float x : v) {
    if (!std::isnan(x)) {
      total += x;
      ++present;
    }
  }
  if (present == v.size()) return;
  if (present == 0) {
    throw ConfigError("impute_missing: recording " +
                      std::to_string(recording_index) + " axis " + axis +
                      " has no observed values");
  }
  const float mean = static_cast<float>(total / static_cast<double>(present));
  for (auto& x : v) {
    if (std::isnan(x)) x = mean;
  }
}

}  // namespace

VibRecording impute_missing(const VibRecording& rec, size_t recording_index) {
  VibRecording out = rec;
  impute_axis(out.x, recording_index, "x");
  impute_axis(out.y, recording_index, "y");
  impute_axis(out.z, recording_index, "z");
  return out;
}

namespace {

template <typename Fn>
std::vector<float> pooled(const std::vector<float>& signal, size_t factor,
                          Fn&& transform) {
  const size_t out_len = (signal.size() + factor - 1) / factor;
  std::vector<float> out(out_len, 0.0f);
  for (size_t i = 0; i < out_len; ++i) {
    const size_t begin = i * factor;
    const size_t end = std::min(signal.size(), begin + factor);
    double acc = 0.0;
    for (size_t j = begin; j < end; ++j) acc += transform(signal[j]);
    out[i] = static_cast<float>(acc / static_cast<double>(end - begin));
  }
  return out;
}

}  // namespace

std::vector<float> decimate_mean(const std::vector<float>& signal,
                                 size_t factor) {
  if (factor <= 1) return signal;
  return pooled(signal, factor, [](float x) { return static_cast<double>(x); });
}

std::vector<float> decimate_abs_mean(const std::vector<float>& signal,
                                     size_t factor) {
  if (factor <= 1) {
    std::vector<float> out = signal;
    for (auto& x : out) x = std::abs(x);
    return out;
  }
  return pooled(signal, factor,
                [](float x) { return std::abs(static_cast<double>(x)); });
}

std::vector<size_t> SplitPlan::train_validation() const {
  std::vector<size_t> all;
  for (const auto& f : folds) all.insert(all.end(), f.begin(), f.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<size_t> SplitPlan::fold_train(size_t k) const {
  std::vector<size_t> idx;
  for (size_t f = 0; f < folds.size(); ++f) {
    if (f == k) continue;
    idx.insert(idx.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

SplitPlan split_dataset(const std::vector<int>& labels, uint64_t seed) {
  int n_classes = 0;
  for (const int l : labels) {
    if (l < 0) throw ConfigError("split_dataset: negative label");
    n_classes = std::max(n_classes, l + 1);
  }
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(n_classes));
  for (size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<size_t>(labels[i])].push_back(i);
  }
  for (size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 5) {
      throw ConfigError("split_dataset: class " + std::to_string(c) + " has " +
                        std::to_string(by_class[c].size()) +
                        " samples, need at least 5");
    }
  }

  Prng rng(derive_seed(seed, 0x51));
  SplitPlan plan;
  for (auto& members : by_class) {
    rng.shuffle(members.data(), members.size());

    // 3:1:1 by largest remainder; ties resolved in train/val/test order.
    const double n = static_cast<double>(members.size());
    const double exact[3] = {n * 3.0 / 5.0, n / 5.0, n / 5.0};
    size_t quota[3];
    double frac[3];
    size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      quota[s] = static_cast<size_t>(std::floor(exact[s]));
      frac[s] = exact[s] - std::floor(exact[s]);
      assigned += quota[s];
    }
    size_t leftover = members.size() - assigned;
    while (leftover > 0) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (frac[s] > frac[best]) best = s;
      }
      quota[best] += 1;
      frac[best] = -1.0;
      --leftover;
    }

    const size_t n_trainval = quota[0] + quota[1];
    for (size_t i = 0; i < quota[2]; ++i) {
      plan.test.push_back(members[n_trainval + i]);
    }
    // Stratified fold assignment: round-robin over the shuffled remainder.
    for (size_t i = 0; i < n_trainval; ++i) {
      plan.folds[i % 4].push_back(members[i]);
    }
  }
  std::sort(plan.test.begin(), plan.test.end());
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

std::vector<size_t> oversample(const std::vector<size_t>& indices,
                               const std::vector<int>& labels, uint64_t seed) {
  if (indices.empty()) throw ConfigError("oversample: empty index list");
  int n_classes = 0;
  for (const size_t i : indices) {
    n_classes = std::max(n_classes, labels.at(i) + 1);
  }
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(n_classes));
  for (const size_t i : indices) {
    by_class[static_cast<size_t>(labels[i])].push_back(i);
  }
  size_t majority = 0;
  for (const auto& members : by_class) {
    majority = std::max(majority, members.size());
  }
  for (size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw ConfigError("oversample: class " + std::to_string(c) +
                        " has no samples");
    }
  }

  Prng rng(derive_seed(seed, 0x05));
  std::vector<size_t> out;
  out.reserve(majority * by_class.size());
  // Coverage first: every original index stays, extras are drawn with
  // replacement.
  for (auto& members : by_class) {
    out.insert(out.end(), members.begin(), members.end());
    for (size_t extra = members.size(); extra < majority; ++extra) {
      out.push_back(members[rng.below(members.size())]);
    }
  }
  return out;
}

}  // namespace evlog::prep
