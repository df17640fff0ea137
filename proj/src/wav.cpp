#include "wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tensor.hpp"

namespace llvc {
namespace {

uint16_t le16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }
uint32_t le32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
void put16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
}
void put32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

int16_t pcm16_from_float(float sample) {
  const float clamped = std::clamp(sample, -1.0f, 1.0f);
  return static_cast<int16_t>(std::lround(clamped * 32767.0f));
}

AudioBuffer read_wav(const std::filesystem::path& path, uint32_t expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::Audio, where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* header = bytes.data() + pos;
    const uint32_t len = le32(header + 4);
    const size_t body = pos + 8;
    const size_t avail = std::min<size_t>(len, bytes.size() - body);
    if (std::memcmp(header, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorCode::Audio, where + "truncated fmt chunk");
      const uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      bits = le16(f + 14);
      if (format == kFormatExtensible && avail >= 26) format = le16(f + 24);
      have_fmt = true;
    } else if (std::memcmp(header, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw Error(ErrorCode::Audio, where + "missing fmt chunk");
  if (!data) throw Error(ErrorCode::Audio, where + "missing data chunk");
  if (channels != 1)
    throw Error(ErrorCode::Audio, where + "mono required (file has " + std::to_string(channels) + " channels)");
  if (expected_rate != 0 && rate != expected_rate)
    throw Error(ErrorCode::Rate, where + "sample rate " + std::to_string(rate) + " Hz, expected " +
                                     std::to_string(expected_rate) + " Hz");
  if (rate == 0) throw Error(ErrorCode::Audio, where + "sample rate is zero");

  AudioBuffer buffer;
  buffer.sample_rate = rate;
  if (format == kFormatPcm && bits == 16) {
    buffer.samples.resize(data_len / 2);
    for (size_t i = 0; i < buffer.samples.size(); ++i)
      buffer.samples[i] = float(int16_t(le16(data + 2 * i))) / 32768.0f;
  } else if (format == kFormatFloat && bits == 32) {
    buffer.samples.resize(data_len / 4);
    for (size_t i = 0; i < buffer.samples.size(); ++i) {
      const uint32_t word = le32(data + 4 * i);
      float v;
      std::memcpy(&v, &word, 4);
      if (!std::isfinite(v)) throw Error(ErrorCode::Audio, where + "non-finite sample at index " + std::to_string(i));
      buffer.samples[i] = v;
    }
  } else {
    throw Error(ErrorCode::Audio, where + "unsupported codec (format " + std::to_string(format) +
                                      ", " + std::to_string(bits) + " bits); need PCM16 or float32");
  }
  return buffer;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer) {
  if (buffer.sample_rate == 0) throw Error(ErrorCode::Parameter, "write_wav: sample rate must be positive");
  const uint32_t data_len = static_cast<uint32_t>(buffer.samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, buffer.sample_rate);
  put32(out, buffer.sample_rate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  for (float s : buffer.samples) put16(out, static_cast<uint16_t>(pcm16_from_float(s)));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace llvc
