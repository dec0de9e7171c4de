#include "evlog/prep/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "evlog/error.hpp"
#include "evlog/io/csv.hpp"
#include "evlog/io/wav.hpp"

namespace evlog::prep {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

json split_to_json(const SplitPlan& split) {
  json folds = json::array();
  for (const auto& f : split.folds) folds.push_back(f);
  return {{"test", split.test}, {"folds", folds}};
}

SplitPlan split_from_json(const json& j) {
  SplitPlan split;
  split.test = j.at("test").get<std::vector<size_t>>();
  const auto& folds = j.at("folds");
  if (folds.size() != 4) throw ParseError("bundle: expected 4 folds");
  for (size_t i = 0; i < 4; ++i) {
    split.folds[i] = folds[i].get<std::vector<size_t>>();
  }
  return split;
}

}  // namespace

void save_bundle(const fs::path& dir, const FeatureBundle& bundle) {
  fs::create_directories(dir);
  const fs::path bin_path = dir / ("features_" + bundle.modality + ".bin");
  const fs::path meta_path = dir / ("features_" + bundle.modality + ".json");

  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw ParseError("cannot write " + bin_path.string());
  std::vector<float> row(bundle.data.time);
  for (size_t b = 0; b < bundle.data.batch; ++b) {
    for (size_t c = 0; c < bundle.data.channels; ++c) {
      const double* src = bundle.data.row(b, c);
      for (size_t t = 0; t < bundle.data.time; ++t) {
        row[t] = static_cast<float>(src[t]);
      }
      bin.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }
  bin.close();

  json j;
  j["modality"] = bundle.modality;
  j["dtype"] = "float32";
  j["shape"] = {bundle.data.batch, bundle.data.channels, bundle.data.time};
  j["labels"] = bundle.labels;
  j["sources"] = bundle.sources;
  j["split"] = split_to_json(bundle.split);
  j["split_seed"] = bundle.split_seed;
  if (bundle.modality == "audio") {
    j["mel"] = {{"n_mels", bundle.mel.n_mels},
                {"n_fft", bundle.mel.n_fft},
                {"hop_length", bundle.mel.hop_length},
                {"top_db", bundle.mel.top_db},
                {"f_min", bundle.mel.f_min},
                {"f_max", bundle.mel.f_max},
                {"sample_rate", bundle.mel.sample_rate},
                {"amin", bundle.mel.amin}};
  } else {
    j["vib_decimate"] = bundle.vib_decimate;
  }
  std::ofstream meta(meta_path, std::ios::trunc);
  meta << j.dump(2) << "\n";
}

FeatureBundle load_bundle(const fs::path& dir, const std::string& modality) {
  const fs::path bin_path = dir / ("features_" + modality + ".bin");
  const fs::path meta_path = dir / ("features_" + modality + ".json");
  std::ifstream meta(meta_path);
  if (!meta) throw ParseError("cannot open " + meta_path.string());
  json j;
  try {
    meta >> j;
  } catch (const json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }

  FeatureBundle bundle;
  bundle.modality = j.at("modality").get<std::string>();
  const auto shape = j.at("shape").get<std::vector<size_t>>();
  if (shape.size() != 3) throw ParseError("bundle: shape must be rank 3");
  bundle.labels = j.at("labels").get<std::vector<int>>();
  bundle.sources = j.at("sources").get<std::vector<std::string>>();
  bundle.split = split_from_json(j.at("split"));
  bundle.split_seed = j.at("split_seed").get<uint64_t>();
  if (j.contains("mel")) {
    const auto& m = j["mel"];
    bundle.mel.n_mels = m.at("n_mels").get<size_t>();
    bundle.mel.n_fft = m.at("n_fft").get<size_t>();
    bundle.mel.hop_length = m.at("hop_length").get<size_t>();
    bundle.mel.top_db = m.at("top_db").get<double>();
    bundle.mel.f_min = m.at("f_min").get<double>();
    bundle.mel.f_max = m.at("f_max").get<double>();
    bundle.mel.sample_rate = m.at("sample_rate").get<double>();
    bundle.mel.amin = m.at("amin").get<double>();
  }
  if (j.contains("vib_decimate")) {
    bundle.vib_decimate = j["vib_decimate"].get<size_t>();
  }

  bundle.data = nn::Tensor3(shape[0], shape[1], shape[2]);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ParseError("cannot open " + bin_path.string());
  std::vector<float> row(shape[2]);
  for (size_t b = 0; b < shape[0]; ++b) {
    for (size_t c = 0; c < shape[1]; ++c) {
      bin.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (!bin) {
        throw ParseError(bin_path.string() + ": shorter than declared shape");
      }
      double* dst = bundle.data.row(b, c);
      for (size_t t = 0; t < shape[2]; ++t) dst[t] = row[t];
    }
  }
  bin.get();
  if (!bin.eof()) {
    throw ParseError(bin_path.string() + ": longer than declared shape");
  }
  if (bundle.labels.size() != bundle.data.batch) {
    throw ParseError("bundle: label count does not match batch size");
  }
  return bundle;
}

ChannelStats fit_stats(const nn::Tensor3& data,
                       const std::vector<size_t>& items) {
  if (items.empty()) throw ConfigError("fit_stats: no items");
  ChannelStats stats;
  stats.mean.assign(data.channels, 0.0);
  stats.stddev.assign(data.channels, 0.0);
  const double n = static_cast<double>(items.size() * data.time);
  for (size_t c = 0; c < data.channels; ++c) {
    double total = 0.0;
    for (const size_t b : items) {
      const double* row = data.row(b, c);
      for (size_t t = 0; t < data.time; ++t) total += row[t];
    }
    const double mean = total / n;
    double ss = 0.0;
    for (const size_t b : items) {
      const double* row = data.row(b, c);
      for (size_t t = 0; t < data.time; ++t) {
        const double d = row[t] - mean;
        ss += d * d;
      }
    }
    const double var = ss / n;
    if (var <= 0.0) {
      throw ConfigError("fit_stats: channel " + std::to_string(c) +
                        " has zero variance on the training portion");
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(var);
  }
  return stats;
}

nn::Tensor3 apply_normalize(const nn::Tensor3& data, const ChannelStats& stats) {
  if (stats.mean.size() != data.channels) {
    throw ConfigError("apply_normalize: stats channel count mismatch");
  }
  nn::Tensor3 out(data.batch, data.channels, data.time);
  for (size_t b = 0; b < data.batch; ++b) {
    for (size_t c = 0; c < data.channels; ++c) {
      const double inv = 1.0 / stats.stddev[c];
      const double* src = data.row(b, c);
      double* dst = out.row(b, c);
      for (size_t t = 0; t < data.time; ++t) {
        dst[t] = (src[t] - stats.mean[c]) * inv;
      }
    }
  }
  return out;
}

ExtractResult extract_features(const fs::path& sim_dir,
                               const ExtractConfig& cfg) {
  const fs::path sessions_dir = sim_dir / "sessions";
  std::vector<fs::path> session_dirs;
  if (fs::exists(sessions_dir)) {
    for (const auto& entry : fs::directory_iterator(sessions_dir)) {
      if (entry.is_directory()) session_dirs.push_back(entry.path());
    }
  }
  std::sort(session_dirs.begin(), session_dirs.end());

  const auto labels_rows = io::read_label_csv_file(sim_dir / "labels.csv");
  if (labels_rows.size() != session_dirs.size()) {
    throw ParseError("label rows (" + std::to_string(labels_rows.size()) +
                     ") do not match session count (" +
                     std::to_string(session_dirs.size()) + ") under " +
                     sim_dir.string());
  }

  std::vector<int> labels;
  std::vector<std::string> sources;
  std::vector<std::vector<float>> waveforms;
  std::vector<VibRecording> vibs;
  for (size_t i = 0; i < session_dirs.size(); ++i) {
    const fs::path wav_path = session_dirs[i] / "audio.wav";
    const auto wav = io::read_wav_file(wav_path);
    std::vector<float> audio(wav.samples.size());
    for (size_t s = 0; s < wav.samples.size(); ++s) {
      audio[s] = io::dequantize_i16(wav.samples[s]);
    }
    waveforms.push_back(std::move(audio));

    const auto rows =
        io::read_vibration_csv_file(session_dirs[i] / "vibration.csv");
    VibRecording rec;
    rec.x.reserve(rows.size());
    rec.y.reserve(rows.size());
    rec.z.reserve(rows.size());
    for (const auto& r : rows) {
      rec.x.push_back(r.x);
      rec.y.push_back(r.y);
      rec.z.push_back(r.z);
    }
    vibs.push_back(impute_missing(rec, i));

    labels.push_back(static_cast<int>(labels_rows[i].kind));
    sources.push_back(session_dirs[i].filename().string());
  }

  if (labels.empty()) {
    throw ConfigError("extract_features: no sessions under " +
                      sim_dir.string());
  }

  const SplitPlan split = split_dataset(labels, cfg.split_seed);

  ExtractResult out;
  auto check_finite = [](const nn::Tensor3& t, const char* what) {
    if (!t.all_finite()) {
      throw ConfigError(std::string(what) +
                        " features contain non-finite values after imputation");
    }
  };

  // Audio: symmetric zero-pad to the longest waveform, then mel spectrogram.
  {
    const auto padded = pad_to_max(waveforms);
    const auto first = dsp::mel_power(padded[0], cfg.mel);
    nn::Tensor3 tensor(padded.size(), cfg.mel.n_mels, first.frames);
    for (size_t b = 0; b < padded.size(); ++b) {
      auto sgram = dsp::mel_spectrogram_db(padded[b], cfg.mel);
      std::copy(sgram.data.begin(), sgram.data.end(), tensor.row(b, 0));
    }
    check_finite(tensor, "audio");
    out.audio.modality = "audio";
    out.audio.data = std::move(tensor);
    out.audio.labels = labels;
    out.audio.sources = sources;
    out.audio.split = split;
    out.audio.split_seed = cfg.split_seed;
    out.audio.mel = cfg.mel;
  }

  // Vibration: pad each axis, then average-pool decimation.
  {
    std::vector<std::vector<float>> all;
    all.reserve(vibs.size() * 3);
    for (const auto& rec : vibs) {
      all.push_back(rec.x);
      all.push_back(rec.y);
      all.push_back(rec.z);
    }
    const auto padded = pad_to_max(all);
    const size_t time =
        decimate_abs_mean(padded[0], cfg.vib_decimate).size();
    nn::Tensor3 tensor(vibs.size(), 3, time);
    for (size_t b = 0; b < vibs.size(); ++b) {
      for (size_t axis = 0; axis < 3; ++axis) {
        const auto dec =
            decimate_abs_mean(padded[b * 3 + axis], cfg.vib_decimate);
        std::copy(dec.begin(), dec.end(), tensor.row(b, axis));
      }
    }
    check_finite(tensor, "vibration");
    out.vibration.modality = "vibration";
    out.vibration.data = std::move(tensor);
    out.vibration.labels = labels;
    out.vibration.sources = sources;
    out.vibration.split = split;
    out.vibration.split_seed = cfg.split_seed;
    out.vibration.vib_decimate = cfg.vib_decimate;
  }

  return out;
}

}  // namespace evlog::prep
