#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace evlog::io {

// 16-bit signed PCM quantization, round-half-away-from-zero with clipping.
int16_t quantize_i16(float x);
float dequantize_i16(int16_t q);

// Mono 16-bit PCM RIFF/WAVE. The writer streams: the header is written with
// placeholder sizes and back-patched on finalize, so only the final bytes
// form a valid file.
class WavWriter {
 public:
  WavWriter(const std::filesystem::path& path, uint32_t sample_rate);
  ~WavWriter();

  WavWriter(const WavWriter&) = delete;
  WavWriter& operator=(const WavWriter&) = delete;

  void append(std::span<const int16_t> samples);
  void finalize();
  bool finalized() const { return finalized_; }
  uint64_t samples_written() const { return samples_written_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  uint32_t sample_rate_store_ = 0;
  uint64_t samples_written_ = 0;
  bool finalized_ = false;
};

std::vector<uint8_t> write_wav(std::span<const int16_t> samples,
                               uint32_t sample_rate);

struct WavData {
  uint32_t sample_rate = 0;
  std::vector<int16_t> samples;
};

// Throws ParseError naming the offending chunk on malformed input.
WavData read_wav(std::span<const uint8_t> bytes);
WavData read_wav_file(const std::filesystem::path& path);

}  // namespace evlog::io
