#include "stream.hpp"

#include <algorithm>
#include <cmath>

namespace llvc {

Stream::Stream(std::shared_ptr<const Generator> generator, uint32_t chunks_per_call)
    : generator_(std::move(generator)), chunks_per_call_(chunks_per_call) {
  if (!generator_) throw Error(ErrorCode::Parameter, "stream requires a model");
  if (chunks_per_call_ == 0) throw Error(ErrorCode::Parameter, "chunks per call must be >= 1");
  reset();
}

void Stream::reset() {
  raw_.clear();
  raw_head_ = 0;
  pre_.clear();
  prenet_caches_ = generator_->initial_prenet_caches();
  encoder_caches_ = generator_->initial_encoder_caches();
  decoder_caches_ = generator_->initial_decoder_caches();
  tail_ = generator_->initial_tail();
  stats_ = StreamStats{};
}

double Stream::algorithmic_latency_s() const {
  return llvc::algorithmic_latency_s(generator_->config(), chunks_per_call_);
}

size_t Stream::batch_samples() const {
  return size_t{chunks_per_call_} * generator_->config().chunk_samples();
}

size_t Stream::output_for_push(size_t count) const {
  if (stats_.flushed) return 0;
  const size_t batch = batch_samples();
  const size_t lookahead = generator_->config().lookahead_samples();
  const size_t available = pending() + count;
  if (available < batch + lookahead) return 0;
  return (available - lookahead) / batch * batch;
}

size_t Stream::output_for_flush() const { return stats_.flushed ? 0 : pending(); }

std::vector<float> Stream::push(std::span<const float> samples) {
  if (stats_.flushed) throw Error(ErrorCode::State, "push after flush; reset the stream first");
  for (float v : samples)
    if (!std::isfinite(v)) throw Error(ErrorCode::Parameter, "input contains non-finite samples");

  const size_t start = raw_.size();
  raw_.insert(raw_.end(), samples.begin(), samples.end());
  stats_.clamped_inputs += clamp_unit(std::span<float>(raw_.data() + start, samples.size()));
  stats_.samples_in += samples.size();

  std::vector<float> out;
  out.reserve(output_for_push(0));
  const size_t batch = batch_samples();
  const size_t lookahead = generator_->config().lookahead_samples();
  while (pending() >= batch + lookahead) run_call(chunks_per_call_, out);
  compact();
  return out;
}

std::vector<float> Stream::flush() {
  if (stats_.flushed) throw Error(ErrorCode::State, "stream already flushed");
  const size_t owed = pending();
  std::vector<float> out;
  if (owed > 0) {
    const ModelConfig& c = generator_->config();
    const size_t chunk = c.chunk_samples();
    size_t chunks = (owed + chunk - 1) / chunk;
    raw_.resize(raw_.size() + chunks * chunk + c.lookahead_samples() - owed, 0.0f);
    out.reserve(chunks * chunk);
    while (chunks > 0) {
      const size_t now = std::min<size_t>(chunks, chunks_per_call_);
      run_call(now, out);
      chunks -= now;
    }
    out.resize(owed);
    stats_.samples_out = stats_.samples_in;
  }
  raw_.clear();
  raw_head_ = 0;
  pre_.clear();
  stats_.flushed = true;
  return out;
}

void Stream::run_call(size_t chunks, std::vector<float>& out) {
  const ModelConfig& c = generator_->config();
  const size_t advance = chunks * c.chunk_samples();
  const size_t window = advance + c.lookahead_samples();

  if (pre_.size() < window) {
    const size_t take = window - pre_.size();
    std::span<const float> wave(raw_.data() + raw_head_, take);
    Tensor processed;
    if (prenet_skew_ == 0) {
      processed = generator_->prenet_forward(wave, prenet_caches_);
    } else {
      std::vector<float> ahead(take, 0.0f);
      const size_t from = raw_head_ + prenet_skew_;
      for (size_t t = 0; t < take && from + t < raw_.size(); ++t) ahead[t] = raw_[from + t];
      processed = generator_->prenet_forward(wave, ahead, prenet_caches_);
    }
    pre_.insert(pre_.end(), processed.data(), processed.data() + processed.size());
    raw_head_ += take;
  }

  const Tensor latent = generator_->encoder_forward(std::span<const float>(pre_.data(), window),
                                                    encoder_caches_);
  const Tensor mask = generator_->decoder_forward(latent, decoder_caches_);
  Tensor samples = generator_->synthesize(latent, mask, tail_);
  clamp_unit(samples.values());
  out.insert(out.end(), samples.data(), samples.data() + samples.size());

  pre_.erase(pre_.begin(), pre_.begin() + static_cast<std::ptrdiff_t>(advance));
  stats_.samples_out += advance;
  stats_.calls += 1;
  stats_.chunks += chunks;
}

void Stream::compact() {
  if (raw_head_ == 0) return;
  raw_.erase(raw_.begin(), raw_.begin() + static_cast<std::ptrdiff_t>(raw_head_));
  raw_head_ = 0;
}

}  // namespace llvc
