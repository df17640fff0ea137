#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "generator.hpp"

namespace llvc {

struct StreamStats {
  uint64_t samples_in = 0;
  uint64_t samples_out = 0;
  uint64_t clamped_inputs = 0;
  uint64_t calls = 0;   // batched network invocations
  uint64_t chunks = 0;  // chunks processed across all calls
  bool flushed = false;
};

/// Chunked streaming inference over a shared Generator.
///
/// Input accumulates until N chunks plus the 2L lookahead are buffered; each
/// network call then emits N * dec_chunk_len * L samples and keeps the
/// lookahead for the next window. flush() zero-pads the tail and makes the
/// stream terminal until reset().
///
/// A Stream is owned by one caller at a time.
class Stream {
 public:
  Stream(std::shared_ptr<const Generator> generator, uint32_t chunks_per_call);

  std::vector<float> push(std::span<const float> samples);
  std::vector<float> flush();
  void reset();

  /// Number of samples push() would emit for an input of `count` samples.
  size_t output_for_push(size_t count) const;
  /// Number of samples flush() would emit.
  size_t output_for_flush() const;

  size_t pending() const { return raw_.size() - raw_head_ + pre_.size(); }
  const StreamStats& stats() const { return stats_; }
  uint32_t chunks_per_call() const { return chunks_per_call_; }
  const Generator& generator() const { return *generator_; }
  double algorithmic_latency_s() const;

  /// Fault injection: narrows the first prenet cache by `samples`, so the
  /// prenet reads that many samples past the current position whenever they
  /// are already buffered. Breaks causality on purpose; 0 disables.
  void set_prenet_skew(size_t samples) { prenet_skew_ = samples; }
  size_t prenet_skew() const { return prenet_skew_; }

 private:
  size_t batch_samples() const;
  void run_call(size_t chunks, std::vector<float>& out);
  void compact();

  std::shared_ptr<const Generator> generator_;
  uint32_t chunks_per_call_;
  size_t prenet_skew_ = 0;

  std::vector<float> raw_;  // input not yet seen by the prenet, from raw_head_
  size_t raw_head_ = 0;
  std::vector<float> pre_;  // prenet output from the current window start

  PrenetCaches prenet_caches_;
  EncoderCaches encoder_caches_;
  DecoderCaches decoder_caches_;
  Tensor tail_;
  StreamStats stats_;
};

}  // namespace llvc
