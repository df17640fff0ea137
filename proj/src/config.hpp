#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace llvc {

/// Generator hyperparameters. Defaults give a 224-sample chunk with a
/// 16-sample lookahead: 240 samples, 15 ms at 16 kHz.
struct ModelConfig {
  uint32_t sample_rate = 16000;
  uint32_t hop = 8;  // L: samples per encoder frame
  uint32_t dec_chunk_len = 28;
  uint32_t enc_dim = 512;
  uint32_t enc_layers = 8;
  uint32_t dcc_kernel = 3;
  uint32_t dec_dim = 256;
  uint32_t dec_layers = 1;
  uint32_t heads = 8;
  uint32_t ffn_dim = 1024;
  uint32_t attn_window = 100;
  uint32_t prenet_layers = 3;
  uint32_t prenet_channels = 32;
  uint32_t prenet_kernel = 7;
  std::vector<uint32_t> prenet_dilations{1, 2, 4};

  size_t chunk_samples() const { return size_t{dec_chunk_len} * hop; }
  size_t lookahead_samples() const { return size_t{2} * hop; }
  size_t window_samples() const { return chunk_samples() + lookahead_samples(); }
  size_t dcc_dilation(size_t layer) const { return size_t{1} << layer; }

  /// Throws Error(Config) naming the first violated constraint.
  void validate() const;

  /// Canonical JSON (fixed key order, no whitespace).
  std::string to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// (N * dec_chunk_len * L + 2L) / F_s.
double algorithmic_latency_s(const ModelConfig& config, uint32_t chunks_per_call = 1);
double algorithmic_latency_s(uint32_t sample_rate, uint32_t hop, uint32_t dec_chunk_len,
                             uint32_t chunks_per_call);

}  // namespace llvc
