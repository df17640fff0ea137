#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "generator.hpp"

namespace llvc {

// Weight file layout (all integers little-endian):
//
//   "LLVC"                      magic
//   u32 version                 = 1
//   u32 meta_len, meta bytes    ModelConfig as UTF-8 JSON
//   u32 tensor_count
//   per tensor, sorted by name:
//     u32 name_len, name bytes
//     u32 rank, u32 dims[rank]
//     u32 dtype                 0 = float32 LE
//     u64 offset                byte offset into the data section
//   zero padding to a 64-byte file offset
//   data section                each tensor starts on a 64-byte boundary
inline constexpr char kWeightMagic[4] = {'L', 'L', 'V', 'C'};
inline constexpr uint32_t kWeightVersion = 1;
inline constexpr size_t kWeightAlignment = 64;

struct LoadedModel {
  ModelConfig config;
  WeightStore weights;
  std::string metadata;  // JSON exactly as stored in the file
};

std::vector<uint8_t> serialize_weights(const WeightStore& store, const ModelConfig& config,
                                       const std::string& metadata = {});
LoadedModel deserialize_weights(std::span<const uint8_t> bytes);

/// Validates `store` against `config` before touching the file system.
void save_weights(const WeightStore& store, const ModelConfig& config,
                  const std::filesystem::path& path, const std::string& metadata = {});
LoadedModel load_weights(const std::filesystem::path& path);

/// SplitMix64, the generator behind random_init.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}
  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) from the top 24 bits.
  double unit() { return double(next() >> 40) * (1.0 / 16777216.0); }

 private:
  uint64_t state_;
};

uint64_t fnv1a64(std::string_view text);

/// Tensor `name` draws from SplitMix64(seed ^ fnv1a64(name)); element k is
/// (2u_k - 1) * sqrt(1 / fan_in), rounded to float.
WeightStore random_init(const ModelConfig& config, uint64_t seed);

size_t parameter_count(const WeightStore& store);

}  // namespace llvc
