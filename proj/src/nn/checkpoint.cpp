#include "evlog/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "evlog/error.hpp"

namespace evlog::nn {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

std::vector<const std::vector<double>*> model_arrays(const Cnn1d& m) {
  return {&m.conv1.weight, &m.conv1.bias,
          &m.bn1.gamma,    &m.bn1.beta,
          &m.bn1.running_mean, &m.bn1.running_var,
          &m.conv2.weight, &m.conv2.bias,
          &m.bn2.gamma,    &m.bn2.beta,
          &m.bn2.running_mean, &m.bn2.running_var,
          &m.fc.weight,    &m.fc.bias};
}

std::vector<std::vector<double>*> model_arrays(Cnn1d& m) {
  return {&m.conv1.weight, &m.conv1.bias,
          &m.bn1.gamma,    &m.bn1.beta,
          &m.bn1.running_mean, &m.bn1.running_var,
          &m.conv2.weight, &m.conv2.bias,
          &m.bn2.gamma,    &m.bn2.beta,
          &m.bn2.running_mean, &m.bn2.running_var,
          &m.fc.weight,    &m.fc.bias};
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError(std::string("checkpoint: truncated ") + what);
  return v;
}

}  // namespace

Checkpoint snapshot_model(const Cnn1d& model, const std::vector<double>& mean,
                          const std::vector<double>& stddev,
                          const std::string& modality, uint32_t vib_decimate) {
  Checkpoint ckpt;
  ckpt.config = model.config();
  for (const auto* arr : model_arrays(model)) {
    ckpt.blobs.insert(ckpt.blobs.end(), arr->begin(), arr->end());
  }
  ckpt.norm_mean = mean;
  ckpt.norm_std = stddev;
  ckpt.modality = modality;
  ckpt.vib_decimate = vib_decimate;
  return ckpt;
}

Cnn1d restore_model(const Checkpoint& ckpt) {
  Cnn1d model(ckpt.config);
  size_t off = 0;
  for (auto* arr : model_arrays(model)) {
    if (off + arr->size() > ckpt.blobs.size()) {
      throw ParseError("checkpoint: parameter blob shorter than model shape");
    }
    std::copy(ckpt.blobs.begin() + static_cast<long>(off),
              ckpt.blobs.begin() + static_cast<long>(off + arr->size()),
              arr->begin());
    off += arr->size();
  }
  if (off != ckpt.blobs.size()) {
    throw ParseError("checkpoint: parameter blob longer than model shape");
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.config.in_channels));
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.config.conv1_filters));
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.config.conv2_filters));
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.config.kernel));
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.config.classes));
  put<uint8_t>(out, ckpt.config.relu_before_bn ? 1 : 0);
  put<uint32_t>(out, ckpt.vib_decimate);
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.modality.size()));
  out.write(ckpt.modality.data(),
            static_cast<std::streamsize>(ckpt.modality.size()));
  put<uint64_t>(out, ckpt.blobs.size());
  out.write(reinterpret_cast<const char*>(ckpt.blobs.data()),
            static_cast<std::streamsize>(ckpt.blobs.size() * sizeof(double)));
  put<uint64_t>(out, ckpt.norm_mean.size());
  out.write(reinterpret_cast<const char*>(ckpt.norm_mean.data()),
            static_cast<std::streamsize>(ckpt.norm_mean.size() * sizeof(double)));
  put<uint64_t>(out, ckpt.norm_std.size());
  out.write(reinterpret_cast<const char*>(ckpt.norm_std.data()),
            static_cast<std::streamsize>(ckpt.norm_std.size() * sizeof(double)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  const auto version = get<uint32_t>(in, "version");
  if (version != kVersion) {
    throw ParseError("checkpoint: unsupported version " +
                     std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.in_channels = get<uint32_t>(in, "in_channels");
  ckpt.config.conv1_filters = get<uint32_t>(in, "conv1_filters");
  ckpt.config.conv2_filters = get<uint32_t>(in, "conv2_filters");
  ckpt.config.kernel = get<uint32_t>(in, "kernel");
  ckpt.config.classes = get<uint32_t>(in, "classes");
  ckpt.config.relu_before_bn = get<uint8_t>(in, "layer order flag") != 0;
  ckpt.vib_decimate = get<uint32_t>(in, "vib_decimate");
  const auto name_len = get<uint32_t>(in, "modality length");
  ckpt.modality.resize(name_len);
  in.read(ckpt.modality.data(), name_len);
  if (!in) throw ParseError("checkpoint: truncated modality");
  const auto blob_len = get<uint64_t>(in, "blob length");
  ckpt.blobs.resize(blob_len);
  in.read(reinterpret_cast<char*>(ckpt.blobs.data()),
          static_cast<std::streamsize>(blob_len * sizeof(double)));
  if (!in) throw ParseError("checkpoint: truncated parameter blob");
  const auto mean_len = get<uint64_t>(in, "norm mean length");
  ckpt.norm_mean.resize(mean_len);
  in.read(reinterpret_cast<char*>(ckpt.norm_mean.data()),
          static_cast<std::streamsize>(mean_len * sizeof(double)));
  const auto std_len = get<uint64_t>(in, "norm std length");
  ckpt.norm_std.resize(std_len);
  in.read(reinterpret_cast<char*>(ckpt.norm_std.data()),
          static_cast<std::streamsize>(std_len * sizeof(double)));
  if (!in) throw ParseError("checkpoint: truncated normalization stats");
  return ckpt;
}

}  // namespace evlog::nn
