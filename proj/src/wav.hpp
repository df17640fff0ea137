#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace llvc {

struct AudioBuffer {
  std::vector<float> samples;
  uint32_t sample_rate = 16000;

  double seconds() const { return sample_rate ? double(samples.size()) / sample_rate : 0.0; }
};

/// Mono RIFF/WAVE, PCM16 (x / 32768) or IEEE float32. Unknown chunks are
/// skipped. Throws Error(Audio) for unsupported layouts and Error(Rate) when
/// the file rate differs from `expected_rate` (0 accepts any rate).
AudioBuffer read_wav(const std::filesystem::path& path, uint32_t expected_rate);

/// PCM16 mono; samples are clamped to [-1, 1] and scaled by 32767.
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer);

int16_t pcm16_from_float(float sample);

}  // namespace llvc
