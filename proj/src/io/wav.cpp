#include "evlog/io/wav.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "evlog/error.hpp"

namespace evlog::io {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kChannels = 1;
constexpr uint16_t kBitsPerSample = 16;

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_tag(std::vector<uint8_t>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

// 44-byte canonical header: RIFF, fmt chunk, data chunk header.
std::vector<uint8_t> make_header(uint32_t sample_rate, uint32_t n_samples) {
  const uint32_t data_bytes = n_samples * 2u;
  std::vector<uint8_t> h;
  h.reserve(44);
  put_tag(h, "RIFF");
  put_u32(h, 36u + data_bytes);
  put_tag(h, "WAVE");
  put_tag(h, "fmt ");
  put_u32(h, 16);
  put_u16(h, kFormatPcm);
  put_u16(h, kChannels);
  put_u32(h, sample_rate);
  put_u32(h, sample_rate * kChannels * (kBitsPerSample / 8));  // byte rate
  put_u16(h, kChannels * (kBitsPerSample / 8));                // block align
  put_u16(h, kBitsPerSample);
  put_tag(h, "data");
  put_u32(h, data_bytes);
  return h;
}

uint32_t get_u32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | static_cast<uint32_t>(b[off + 1]) << 8 |
         static_cast<uint32_t>(b[off + 2]) << 16 |
         static_cast<uint32_t>(b[off + 3]) << 24;
}

uint16_t get_u16(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint16_t>(static_cast<uint16_t>(b[off]) |
                               static_cast<uint16_t>(b[off + 1]) << 8);
}

bool tag_is(std::span<const uint8_t> b, size_t off, const char* tag) {
  return std::memcmp(b.data() + off, tag, 4) == 0;
}

}  // namespace

int16_t quantize_i16(float x) {
  const double scaled = static_cast<double>(x) * 32767.0;
  double r = scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
  if (r > 32767.0) r = 32767.0;
  if (r < -32768.0) r = -32768.0;
  return static_cast<int16_t>(r);
}

float dequantize_i16(int16_t q) { return static_cast<float>(q) / 32767.0f; }

WavWriter::WavWriter(const std::filesystem::path& path, uint32_t sample_rate)
    : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw ParseError("cannot open WAV file for writing: " + path.string());
  }
  const auto header = make_header(sample_rate, 0);
  out_.write(reinterpret_cast<const char*>(header.data()),
             static_cast<std::streamsize>(header.size()));
  sample_rate_store_ = sample_rate;
}

void WavWriter::append(std::span<const int16_t> samples) {
  if (finalized_) throw ParseError("append after finalize: " + path_.string());
  std::vector<uint8_t> buf(samples.size() * 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<uint16_t>(samples[i]);
    buf[2 * i] = static_cast<uint8_t>(u);
    buf[2 * i + 1] = static_cast<uint8_t>(u >> 8);
  }
  out_.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
  samples_written_ += samples.size();
}

void WavWriter::finalize() {
  if (finalized_) return;
  const auto header =
      make_header(sample_rate_store_, static_cast<uint32_t>(samples_written_));
  out_.seekp(0);
  out_.write(reinterpret_cast<const char*>(header.data()),
             static_cast<std::streamsize>(header.size()));
  out_.close();
  finalized_ = true;
}

WavWriter::~WavWriter() {
  if (!finalized_) finalize();
}

std::vector<uint8_t> write_wav(std::span<const int16_t> samples,
                               uint32_t sample_rate) {
  auto bytes = make_header(sample_rate, static_cast<uint32_t>(samples.size()));
  bytes.reserve(bytes.size() + samples.size() * 2);
  for (const int16_t s : samples) {
    const auto u = static_cast<uint16_t>(s);
    bytes.push_back(static_cast<uint8_t>(u));
    bytes.push_back(static_cast<uint8_t>(u >> 8));
  }
  return bytes;
}

WavData read_wav(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF")) {
    throw ParseError("WAV: missing RIFF chunk");
  }
  if (!tag_is(bytes, 8, "WAVE")) throw ParseError("WAV: missing WAVE form type");
  const uint32_t riff_size = get_u32(bytes, 4);
  if (riff_size + 8 > bytes.size()) {
    throw ParseError("WAV: RIFF chunk size exceeds file size");
  }

  WavData out;
  bool have_fmt = false;
  bool have_data = false;
  size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const uint32_t chunk_size = get_u32(bytes, off + 4);
    if (tag_is(bytes, off, "fmt ")) {
      if (chunk_size < 16 || off + 8 + chunk_size > bytes.size()) {
        throw ParseError("WAV: truncated fmt chunk");
      }
      if (get_u16(bytes, off + 8) != kFormatPcm) {
        throw ParseError("WAV: fmt chunk: not integer PCM");
      }
      if (get_u16(bytes, off + 10) != kChannels) {
        throw ParseError("WAV: fmt chunk: expected mono");
      }
      out.sample_rate = get_u32(bytes, off + 12);
      if (out.sample_rate == 0) throw ParseError("WAV: fmt chunk: zero rate");
      const uint32_t byte_rate = get_u32(bytes, off + 16);
      const uint16_t bits = get_u16(bytes, off + 22);
      if (bits != kBitsPerSample) {
        throw ParseError("WAV: fmt chunk: expected 16-bit samples");
      }
      if (byte_rate != out.sample_rate * 2u) {
        throw ParseError("WAV: fmt chunk: inconsistent byte rate");
      }
      have_fmt = true;
    } else if (tag_is(bytes, off, "data")) {
      if (!have_fmt) throw ParseError("WAV: data chunk precedes fmt chunk");
      if (off + 8 + chunk_size > bytes.size()) {
        throw ParseError("WAV: truncated data chunk payload");
      }
      if (chunk_size % 2 != 0) {
        throw ParseError("WAV: data chunk: odd byte count for 16-bit PCM");
      }
      out.samples.resize(chunk_size / 2);
      for (size_t i = 0; i < out.samples.size(); ++i) {
        const size_t p = off + 8 + 2 * i;
        out.samples[i] = static_cast<int16_t>(
            static_cast<uint16_t>(bytes[p]) |
            static_cast<uint16_t>(bytes[p + 1]) << 8);
      }
      have_data = true;
    }
    // Chunks are word-aligned; skip any padding byte.
    off += 8 + chunk_size + (chunk_size % 2);
  }
  if (!have_fmt) throw ParseError("WAV: missing fmt chunk");
  if (!have_data) throw ParseError("WAV: missing data chunk");
  return out;
}

WavData read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open WAV file: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return read_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace evlog::io
