#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace llvc {

struct MelConfig {
  std::vector<size_t> fft_sizes{512, 1024, 2048};
  size_t n_mels = 80;
  double f_min = 0.0;
  double f_max = 8000.0;  // F_s / 2
  uint32_t sample_rate = 16000;
  double log_floor = 1e-5;

  static MelConfig for_rate(uint32_t sample_rate);
  void validate() const;
};

enum class Window { Hann, Rectangular };

std::vector<float> make_window(Window kind, size_t length);

/// |DFT| of windowed frames: [frames x (fft_size/2 + 1)]. Frames start at
/// multiples of `hop`; an input shorter than one frame is zero-padded.
Tensor stft_magnitude(std::span<const float> x, size_t fft_size, size_t hop, std::span<const float> window);

/// Triangular filters on the HTK mel scale: [n_mels x (fft_size/2 + 1)].
Tensor mel_filterbank(const MelConfig& config, size_t fft_size);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Mean over resolutions of the mean absolute difference between
/// log(mel power + floor) spectrograms. Hops are fft/4, Hann windows.
double mel_distance(std::span<const float> x, std::span<const float> y, const MelConfig& config);

/// 10 log10(sum ref^2 / sum (ref - test)^2); +infinity when bit-equal.
double snr_db(std::span<const float> reference, std::span<const float> test);

}  // namespace llvc
