#include "evlog/train/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "evlog/error.hpp"
#include "evlog/nn/optim.hpp"
#include "evlog/prng.hpp"

namespace evlog::train {

namespace {

nn::Tensor3 gather(const nn::Tensor3& data, std::span<const size_t> items) {
  nn::Tensor3 out(items.size(), data.channels, data.time);
  for (size_t i = 0; i < items.size(); ++i) {
    std::copy(data.row(items[i], 0),
              data.row(items[i], 0) + data.channels * data.time,
              out.row(i, 0));
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               std::span<const size_t> items) {
  std::vector<int> out(items.size());
  for (size_t i = 0; i < items.size(); ++i) out[i] = labels[items[i]];
  return out;
}

struct EvalResult {
  double loss = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate(nn::Cnn1d& model, const nn::Tensor3& data,
                    const std::vector<int>& labels) {
  EvalResult out;
  const size_t chunk = 64;
  double total = 0.0;
  for (size_t begin = 0; begin < data.batch; begin += chunk) {
    const size_t end = std::min(data.batch, begin + chunk);
    std::vector<size_t> idx(end - begin);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    const nn::Tensor3 batch = gather(data, idx);
    const std::vector<int> batch_labels =
        gather_labels(labels, idx);
    const nn::Matrix logits = model.forward(batch, /*train=*/false);
    const auto loss = nn::cross_entropy(logits, batch_labels);
    total += loss.loss * static_cast<double>(end - begin);
    const auto preds = nn::predict(logits);
    out.predictions.insert(out.predictions.end(), preds.begin(), preds.end());
  }
  out.loss = total / static_cast<double>(data.batch);
  return out;
}

struct SingleRunInput {
  const nn::Tensor3* data;  // normalized for this fold
  const std::vector<int>* labels;
  std::vector<size_t> train_idx;  // already oversampled
  std::vector<size_t> val_idx;
  std::vector<size_t> test_idx;
};

RunRecord train_single_run(const SingleRunInput& in, const TrainConfig& cfg,
                           int fold, int run, uint64_t seed,
                           nn::Cnn1d* trained_out) {
  RunRecord rec;
  rec.fold = fold;
  rec.run = run;
  rec.seed = seed;

  nn::CnnConfig mcfg;
  mcfg.in_channels = in.data->channels;
  mcfg.relu_before_bn = cfg.relu_before_bn;
  nn::Cnn1d model(mcfg);
  model.init(seed);
  nn::Adam adam(cfg.beta1, cfg.beta2, cfg.adam_eps);
  nn::StepLr scheduler(cfg.initial_lr, cfg.lr_step, cfg.lr_gamma);

  const nn::Tensor3 val_data = gather(*in.data, in.val_idx);
  const std::vector<int> val_labels = gather_labels(*in.labels, in.val_idx);

  Prng shuffle_rng(derive_seed(seed, 0xE0));
  std::vector<size_t> order = in.train_idx;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;
  std::vector<double> best_bn_stats;
  int since_best = 0;

  auto snapshot = [&]() {
    best_params.clear();
    for (const auto& p : model.params()) {
      best_params.emplace_back(p.value, p.value + p.n);
    }
    best_bn_stats.clear();
    for (const auto* v : {&model.bn1.running_mean, &model.bn1.running_var,
                          &model.bn2.running_mean, &model.bn2.running_var}) {
      best_bn_stats.insert(best_bn_stats.end(), v->begin(), v->end());
    }
  };
  auto restore = [&]() {
    if (best_params.empty()) return;
    auto params = model.params();
    for (size_t i = 0; i < params.size(); ++i) {
      std::copy(best_params[i].begin(), best_params[i].end(), params[i].value);
    }
    size_t off = 0;
    for (auto* v : {&model.bn1.running_mean, &model.bn1.running_var,
                    &model.bn2.running_mean, &model.bn2.running_var}) {
      std::copy(best_bn_stats.begin() + static_cast<long>(off),
                best_bn_stats.begin() + static_cast<long>(off + v->size()),
                v->begin());
      off += v->size();
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduler.lr(epoch);
    shuffle_rng.shuffle(order.data(), order.size());
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      const std::span<const size_t> batch_idx(order.data() + begin, end - begin);
      const nn::Tensor3 batch = gather(*in.data, batch_idx);
      const std::vector<int> batch_labels = gather_labels(*in.labels, batch_idx);
      const nn::Matrix logits = model.forward(batch, /*train=*/true);
      const auto loss = nn::cross_entropy(logits, batch_labels);
      if (!std::isfinite(loss.loss)) {
        rec.diverged = true;
        rec.epochs_trained = epoch + 1;
        return rec;
      }
      model.zero_grad();
      model.backward(loss.grad);
      try {
        adam.step(model.params(), lr);
      } catch (const ShapeError&) {
        // Non-finite gradients: the run diverged, record it rather than
        // aborting the experiment.
        rec.diverged = true;
        rec.epochs_trained = epoch + 1;
        return rec;
      }
    }

    const EvalResult val = evaluate(model, val_data, val_labels);
    rec.epochs_trained = epoch + 1;
    if (!std::isfinite(val.loss)) {
      rec.diverged = true;
      return rec;
    }
    if (val.loss < best_val - cfg.min_delta) {
      best_val = val.loss;
      snapshot();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) {
        rec.stopped_early = true;
        break;
      }
    }
  }
  restore();

  const nn::Tensor3 test_data = gather(*in.data, in.test_idx);
  const std::vector<int> test_labels = gather_labels(*in.labels, in.test_idx);
  const EvalResult test = evaluate(model, test_data, test_labels);
  rec.cm = confusion(test.predictions, test_labels);
  rec.accuracy = rec.cm.accuracy();
  if (trained_out != nullptr) *trained_out = model;
  return rec;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (initial_lr <= 0.0) throw ConfigError("initial_lr must be positive");
  if (lr_gamma <= 0.0 || lr_gamma > 1.0) {
    throw ConfigError("lr_gamma must be in (0, 1]");
  }
  if (lr_step < 1) throw ConfigError("lr_step must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (runs_per_fold < 1) throw ConfigError("runs_per_fold must be >= 1");
}

int64_t ConfusionMatrix::total() const {
  int64_t n = 0;
  for (const auto& row : counts) {
    for (const int64_t v : row) n += v;
  }
  return n;
}

int64_t ConfusionMatrix::trace() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionMatrix confusion(std::span<const int> predictions,
                          std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("confusion: prediction/label length mismatch");
  }
  if (predictions.empty()) throw ShapeError("confusion: empty input");
  ConfusionMatrix cm;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int t = labels[i];
    const int p = predictions[i];
    if (t < 0 || t > 2 || p < 0 || p > 2) {
      throw ShapeError("confusion: class index out of range");
    }
    cm.counts[static_cast<size_t>(t)][static_cast<size_t>(p)] += 1;
  }
  return cm;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ShapeError("median of empty list");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

ExperimentResult run_experiment(const prep::FeatureBundle& bundle,
                                const TrainConfig& cfg, uint64_t master_seed,
                                int threads) {
  cfg.validate();
  const auto& split = bundle.split;
  for (const auto& fold : split.folds) {
    if (fold.empty()) throw ConfigError("run_experiment: empty fold");
  }
  if (split.test.empty()) throw ConfigError("run_experiment: empty test set");

  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }

  ExperimentResult result;
  for (int fold = 0; fold < 4; ++fold) {
    const std::vector<size_t> fold_train = split.fold_train(static_cast<size_t>(fold));
    const std::vector<size_t>& fold_val =
        split.fold_validation(static_cast<size_t>(fold));

    // Normalization statistics come from this fold's training portion only.
    const prep::ChannelStats stats = prep::fit_stats(bundle.data, fold_train);
    const nn::Tensor3 normalized = prep::apply_normalize(bundle.data, stats);

    std::vector<RunRecord> fold_records(static_cast<size_t>(cfg.runs_per_fold));
    std::vector<nn::Cnn1d> fold_models;
    fold_models.reserve(static_cast<size_t>(cfg.runs_per_fold));
    for (int r = 0; r < cfg.runs_per_fold; ++r) {
      fold_models.emplace_back(nn::CnnConfig{});
    }

    auto run_one = [&](int r) {
      const uint64_t run_seed =
          derive_seed(master_seed, 0xF00D + static_cast<uint64_t>(fold) * 1009 +
                                       static_cast<uint64_t>(r));
      SingleRunInput input;
      input.data = &normalized;
      input.labels = &bundle.labels;
      input.train_idx =
          prep::oversample(fold_train, bundle.labels, derive_seed(run_seed, 0xA1));
      input.val_idx = cfg.oversample_eval
                          ? prep::oversample(fold_val, bundle.labels,
                                             derive_seed(run_seed, 0xA2))
                          : fold_val;
      input.test_idx = cfg.oversample_eval
                           ? prep::oversample(split.test, bundle.labels,
                                              derive_seed(run_seed, 0xA3))
                           : split.test;
      fold_records[static_cast<size_t>(r)] =
          train_single_run(input, cfg, fold + 1, r, run_seed,
                           &fold_models[static_cast<size_t>(r)]);
    };

    if (threads == 1 || cfg.runs_per_fold == 1) {
      for (int r = 0; r < cfg.runs_per_fold; ++r) run_one(r);
    } else {
      std::vector<std::future<void>> futures;
      std::atomic<int> next{0};
      const int workers = std::min(threads, cfg.runs_per_fold);
      for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&]() {
          while (true) {
            const int r = next.fetch_add(1);
            if (r >= cfg.runs_per_fold) break;
            run_one(r);
          }
        }));
      }
      for (auto& f : futures) f.get();
    }

    FoldReport report;
    report.fold = fold + 1;
    for (int r = 0; r < cfg.runs_per_fold; ++r) {
      const auto& rec = fold_records[static_cast<size_t>(r)];
      result.records.push_back(rec);
      if (rec.diverged) {
        report.failed_runs += 1;
        continue;
      }
      report.accuracies.push_back(rec.accuracy);
      if (report.best_run < 0 ||
          rec.accuracy >
              fold_records[static_cast<size_t>(report.best_run)].accuracy) {
        report.best_run = r;
      }
      if (rec.accuracy > result.best_accuracy) {
        result.best_accuracy = rec.accuracy;
        result.best_checkpoint = nn::snapshot_model(
            fold_models[static_cast<size_t>(r)], stats.mean, stats.stddev,
            bundle.modality, static_cast<uint32_t>(bundle.vib_decimate));
      }
    }
    if (!report.accuracies.empty()) {
      report.min_accuracy =
          *std::min_element(report.accuracies.begin(), report.accuracies.end());
      report.max_accuracy =
          *std::max_element(report.accuracies.begin(), report.accuracies.end());
      report.median_accuracy = lower_median(report.accuracies);
      report.best_confusion =
          fold_records[static_cast<size_t>(report.best_run)].cm;
    }
    result.folds.push_back(std::move(report));
  }
  return result;
}

}  // namespace evlog::train
