#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evlog/error.hpp"
#include "evlog/io/config.hpp"
#include "evlog/io/csv.hpp"
#include "evlog/nn/checkpoint.hpp"
#include "evlog/prep/bundle.hpp"
#include "evlog/prng.hpp"
#include "evlog/scenario.hpp"
#include "evlog/sim/logger.hpp"
#include "evlog/train/report.hpp"

namespace fs = std::filesystem;
using namespace evlog;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> scenario_path;
};

io::PipelineConfig resolve_config(const CommonArgs& args) {
  io::KeyValueConfig kv;
  if (!args.config_path.empty()) {
    kv = io::KeyValueConfig::from_file(args.config_path);
  }
  io::PipelineConfig cfg = io::load_pipeline_config(kv);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.out_dir = *args.out;
  if (args.scenario_path) cfg.scenario_file = *args.scenario_path;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_scenario = false) {
  cmd->add_option("--config", args.config_path,
                  "Pipeline config file (key = value lines)");
  cmd->add_option("--seed", args.seed, "Master seed (overrides config)");
  cmd->add_option("--out", args.out, "Output directory (overrides config)");
  if (with_scenario) {
    cmd->add_option("--scenario", args.scenario_path,
                    "Use an existing scenario file instead of generating one");
  }
}

int cmd_simulate(const io::PipelineConfig& cfg) {
  Scenario scenario;
  if (cfg.scenario_file) {
    std::ifstream in(*cfg.scenario_file);
    if (!in) throw ParseError("cannot open scenario: " + cfg.scenario_file->string());
    scenario = read_scenario(in);
  } else {
    scenario = build_scenario(cfg.scenario, derive_seed(cfg.seed, 1));
  }

  const auto features =
      synth_feature_streams(scenario, cfg.scenario, derive_seed(cfg.seed, 2));
  const auto labeling = synth_labeling_streams(scenario, cfg.scenario);

  fs::create_directories(cfg.sim_dir());
  {
    std::ofstream manifest(cfg.sim_dir() / "scenario.txt", std::ios::trunc);
    write_scenario(manifest, scenario);
  }

  const auto result =
      sim::run_simulation(features, labeling, cfg.logger, cfg.sim_dir());

  std::cout << "scenario events: " << scenario.events.size() << "\n";
  std::cout << "sessions:        " << result.sessions.size() << "\n";
  std::cout << "labels:          " << result.labels.size() << "\n";
  std::cout << "report:          " << result.report_path.string() << "\n";
  if (!result.ok()) {
    for (const auto& f : result.faults) {
      std::cerr << "fault @" << f.time << " s: " << f.what << "\n";
    }
    return 2;
  }
  return 0;
}

int cmd_preprocess(const io::PipelineConfig& cfg) {
  const auto extracted = prep::extract_features(cfg.sim_dir(), cfg.extract);
  prep::save_bundle(cfg.features_dir(), extracted.audio);
  prep::save_bundle(cfg.features_dir(), extracted.vibration);
  const auto& a = extracted.audio.data;
  const auto& v = extracted.vibration.data;
  std::cout << "audio bundle:     " << a.batch << " x " << a.channels << " x "
            << a.time << "\n";
  std::cout << "vibration bundle: " << v.batch << " x " << v.channels << " x "
            << v.time << "\n";
  std::cout << "features dir:     " << cfg.features_dir().string() << "\n";
  return 0;
}

void train_one_modality(const io::PipelineConfig& cfg,
                        const std::string& modality) {
  const auto bundle = prep::load_bundle(cfg.features_dir(), modality);
  const auto result = train::run_experiment(bundle, cfg.train,
                                            derive_seed(cfg.seed, 4), cfg.threads);
  fs::create_directories(cfg.results_dir());
  train::write_results_csv(cfg.results_dir() / ("results_" + modality + ".csv"),
                           result.records);
  for (const auto& fold : result.folds) {
    train::write_confusion_csv(
        cfg.results_dir() / ("confusion_fold" + std::to_string(fold.fold) +
                             "_" + modality + ".csv"),
        fold.best_confusion);
  }
  const std::string text = train::summarize_text(modality, result.folds);
  std::ofstream(cfg.results_dir() / ("summary_" + modality + ".txt"),
                std::ios::trunc)
      << text;
  std::ofstream(cfg.results_dir() / ("summary_" + modality + ".json"),
                std::ios::trunc)
      << train::summarize_json(modality, result.folds) << "\n";
  if (result.best_checkpoint) {
    nn::save_checkpoint(cfg.results_dir() / ("model_" + modality + ".ckpt"),
                        *result.best_checkpoint);
  }
  std::cout << text << "\n";
}

int cmd_train(const io::PipelineConfig& cfg) {
  train_one_modality(cfg, "audio");
  train_one_modality(cfg, "vibration");
  std::cout << "results dir: " << cfg.results_dir().string() << "\n";
  return 0;
}

int evaluate_one_modality(const io::PipelineConfig& cfg,
                          const std::string& modality) {
  const fs::path ckpt_path = cfg.results_dir() / ("model_" + modality + ".ckpt");
  if (!fs::exists(ckpt_path)) {
    throw ParseError("no checkpoint at " + ckpt_path.string() +
                     " (run 'train' first)");
  }
  const auto ckpt = nn::load_checkpoint(ckpt_path);
  auto model = nn::restore_model(ckpt);
  const auto bundle = prep::load_bundle(cfg.features_dir(), modality);

  prep::ChannelStats stats{ckpt.norm_mean, ckpt.norm_std};
  const auto normalized = prep::apply_normalize(bundle.data, stats);
  const auto& test_idx = bundle.split.test;

  std::vector<int> predictions;
  std::vector<int> labels;
  for (const size_t i : test_idx) {
    nn::Tensor3 one(1, normalized.channels, normalized.time);
    std::copy(normalized.row(i, 0),
              normalized.row(i, 0) + normalized.channels * normalized.time,
              one.row(0, 0));
    const auto logits = model.forward(one, /*train=*/false);
    predictions.push_back(nn::predict(logits)[0]);
    labels.push_back(bundle.labels[i]);
  }
  const auto cm = train::confusion(predictions, labels);
  std::cout << "[" << modality << "] test accuracy "
            << train::format_percent(cm.accuracy()) << "% over " << cm.total()
            << " samples\n";

  nlohmann::json j;
  j["modality"] = modality;
  j["accuracy"] = cm.accuracy();
  j["test_samples"] = cm.total();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : cm.counts) rows.push_back({row[0], row[1], row[2]});
  j["confusion"] = rows;
  std::ofstream(cfg.results_dir() / ("evaluation_" + modality + ".json"),
                std::ios::trunc)
      << j.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const io::PipelineConfig& cfg) {
  evaluate_one_modality(cfg, "audio");
  evaluate_one_modality(cfg, "vibration");
  return 0;
}

int cmd_report(const io::PipelineConfig& cfg) {
  bool any = false;
  for (const std::string modality : {"audio", "vibration"}) {
    const fs::path csv = cfg.results_dir() / ("results_" + modality + ".csv");
    if (!fs::exists(csv)) continue;
    any = true;
    const auto records = train::read_results_csv(csv);
    auto folds = train::fold_reports_from_records(records);
    for (auto& fold : folds) {
      const fs::path cm_path =
          cfg.results_dir() / ("confusion_fold" + std::to_string(fold.fold) +
                               "_" + modality + ".csv");
      if (fs::exists(cm_path)) {
        fold.best_confusion = train::read_confusion_csv(cm_path);
      }
    }
    std::cout << train::summarize_text(modality, folds) << "\n";
  }
  if (!any) {
    throw ParseError("no results under " + cfg.results_dir().string() +
                     " (run 'train' first)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Autonomous sensor-logger simulator and event-classification pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* simulate =
      app.add_subcommand("simulate", "Generate a scenario and run the device "
                                     "simulation (WAV/CSV/label outputs)");
  add_common(simulate, args, /*with_scenario=*/true);
  auto* preprocess = app.add_subcommand(
      "preprocess", "Extract feature bundles from a simulation output tree");
  add_common(preprocess, args);
  auto* trainc = app.add_subcommand(
      "train", "Run the 4-fold cross-validation experiment on both modalities");
  add_common(trainc, args);
  auto* evaluate = app.add_subcommand(
      "evaluate", "Evaluate the saved best checkpoint on the held-out test set");
  add_common(evaluate, args);
  auto* report = app.add_subcommand(
      "report", "Summarize training results from the results directory");
  add_common(report, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const io::PipelineConfig cfg = resolve_config(args);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (preprocess->parsed()) return cmd_preprocess(cfg);
    if (trainc->parsed()) return cmd_train(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (report->parsed()) return cmd_report(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
