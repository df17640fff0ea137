#include "llvc/llvc.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "config.hpp"
#include "generator.hpp"
#include "metrics.hpp"
#include "stream.hpp"
#include "weights_io.hpp"
#include "wav.hpp"

struct llvc_model {
  std::shared_ptr<const llvc::Generator> generator;
  std::string metadata;
};

struct llvc_stream {
  std::shared_ptr<const llvc::Generator> generator;
  llvc::Stream stream;
};

namespace {

thread_local std::string g_last_error;

llvc_status to_status(llvc::ErrorCode code) {
  using llvc::ErrorCode;
  switch (code) {
    case ErrorCode::Parameter: return LLVC_ERR_PARAMETER;
    case ErrorCode::Dimension: return LLVC_ERR_DIMENSION;
    case ErrorCode::Config: return LLVC_ERR_CONFIG;
    case ErrorCode::State: return LLVC_ERR_STATE;
    case ErrorCode::Framing: return LLVC_ERR_FRAMING;
    case ErrorCode::Format: return LLVC_ERR_FORMAT;
    case ErrorCode::Version: return LLVC_ERR_VERSION;
    case ErrorCode::Inconsistent: return LLVC_ERR_INCONSISTENT;
    case ErrorCode::Bounds: return LLVC_ERR_BOUNDS;
    case ErrorCode::Io: return LLVC_ERR_IO;
    case ErrorCode::Audio: return LLVC_ERR_AUDIO;
    case ErrorCode::Rate: return LLVC_ERR_RATE;
  }
  return LLVC_ERR_INTERNAL;
}

llvc_status fail(llvc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename Fn>
llvc_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const llvc::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LLVC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LLVC_ERR_INTERNAL, e.what());
  }
}

#define LLVC_REQUIRE(cond, msg) \
  do {                          \
    if (!(cond)) return fail(LLVC_ERR_PARAMETER, msg); \
  } while (0)

}  // namespace

extern "C" {

const char* llvc_version(void) { return "1.0.0"; }

const char* llvc_status_string(llvc_status status) {
  switch (status) {
    case LLVC_OK: return "ok";
    case LLVC_ERR_PARAMETER: return "parameter error";
    case LLVC_ERR_DIMENSION: return "dimension error";
    case LLVC_ERR_CONFIG: return "config error";
    case LLVC_ERR_STATE: return "state error";
    case LLVC_ERR_FRAMING: return "framing error";
    case LLVC_ERR_FORMAT: return "not a weight file";
    case LLVC_ERR_VERSION: return "unsupported version";
    case LLVC_ERR_INCONSISTENT: return "inconsistent model";
    case LLVC_ERR_BOUNDS: return "bounds error";
    case LLVC_ERR_IO: return "i/o error";
    case LLVC_ERR_AUDIO: return "audio format error";
    case LLVC_ERR_RATE: return "sample rate mismatch";
    case LLVC_ERR_BUFFER: return "output buffer too small";
    case LLVC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* llvc_last_error(void) { return g_last_error.c_str(); }

llvc_status llvc_model_init_random(const char* config_json, uint64_t seed, llvc_model** out) {
  LLVC_REQUIRE(out, "llvc_model_init_random: out is null");
  return guarded([&] {
    llvc::ModelConfig config;
    if (config_json && *config_json) config = llvc::ModelConfig::from_json(config_json);
    config.validate();
    auto weights = llvc::random_init(config, seed);
    auto model = std::make_unique<llvc_model>();
    model->metadata = config.to_json();
    model->generator = std::make_shared<const llvc::Generator>(config, std::move(weights));
    *out = model.release();
    return LLVC_OK;
  });
}

llvc_status llvc_model_load(const char* path, llvc_model** out) {
  LLVC_REQUIRE(path && out, "llvc_model_load: null argument");
  return guarded([&] {
    llvc::LoadedModel loaded = llvc::load_weights(path);
    auto model = std::make_unique<llvc_model>();
    model->metadata = std::move(loaded.metadata);
    model->generator = std::make_shared<const llvc::Generator>(loaded.config, std::move(loaded.weights));
    *out = model.release();
    return LLVC_OK;
  });
}

llvc_status llvc_model_save(const llvc_model* model, const char* path) {
  LLVC_REQUIRE(model && path, "llvc_model_save: null argument");
  return guarded([&] {
    const auto& g = *model->generator;
    llvc::save_weights(g.weights(), g.config(), path, model->metadata);
    return LLVC_OK;
  });
}

void llvc_model_free(llvc_model* model) { delete model; }

llvc_status llvc_model_config_json(const llvc_model* model, char* buf, size_t capacity, size_t* needed) {
  LLVC_REQUIRE(model, "llvc_model_config_json: model is null");
  const std::string& json = model->metadata;
  if (needed) *needed = json.size() + 1;
  if (!buf) return LLVC_OK;
  if (capacity < json.size() + 1) return fail(LLVC_ERR_BUFFER, "config JSON needs " + std::to_string(json.size() + 1) + " bytes");
  std::memcpy(buf, json.c_str(), json.size() + 1);
  return LLVC_OK;
}

llvc_status llvc_model_geometry(const llvc_model* model, llvc_geometry* out) {
  LLVC_REQUIRE(model && out, "llvc_model_geometry: null argument");
  const auto& c = model->generator->config();
  out->sample_rate = c.sample_rate;
  out->hop = c.hop;
  out->dec_chunk_len = c.dec_chunk_len;
  out->chunk_samples = static_cast<uint32_t>(c.chunk_samples());
  out->lookahead_samples = static_cast<uint32_t>(c.lookahead_samples());
  return LLVC_OK;
}

llvc_status llvc_model_counts(const llvc_model* model, size_t* tensors, size_t* parameters) {
  LLVC_REQUIRE(model, "llvc_model_counts: model is null");
  const auto& w = model->generator->weights();
  if (tensors) *tensors = w.size();
  if (parameters) *parameters = llvc::parameter_count(w);
  return LLVC_OK;
}

llvc_status llvc_latency_seconds(uint32_t sample_rate, uint32_t hop, uint32_t dec_chunk_len,
                                 uint32_t chunks_per_call, double* seconds) {
  LLVC_REQUIRE(seconds, "llvc_latency_seconds: seconds is null");
  return guarded([&] {
    *seconds = llvc::algorithmic_latency_s(sample_rate, hop, dec_chunk_len, chunks_per_call);
    return LLVC_OK;
  });
}

llvc_status llvc_forward_offline(const llvc_model* model, const float* in, size_t count, float* out) {
  LLVC_REQUIRE(model && (count == 0 || (in && out)), "llvc_forward_offline: null argument");
  return guarded([&] {
    const auto result = model->generator->forward_offline(std::span<const float>(in, count));
    std::copy(result.begin(), result.end(), out);
    return LLVC_OK;
  });
}

llvc_status llvc_stream_new(const llvc_model* model, uint32_t chunks_per_call, llvc_stream** out) {
  LLVC_REQUIRE(model && out, "llvc_stream_new: null argument");
  return guarded([&] {
    *out = new llvc_stream{model->generator, llvc::Stream(model->generator, chunks_per_call)};
    return LLVC_OK;
  });
}

void llvc_stream_free(llvc_stream* stream) { delete stream; }

size_t llvc_stream_output_for_push(const llvc_stream* stream, size_t count) {
  return stream ? stream->stream.output_for_push(count) : 0;
}

size_t llvc_stream_output_for_flush(const llvc_stream* stream) {
  return stream ? stream->stream.output_for_flush() : 0;
}

llvc_status llvc_stream_push(llvc_stream* stream, const float* in, size_t count, float* out,
                             size_t capacity, size_t* written) {
  LLVC_REQUIRE(stream && (count == 0 || in), "llvc_stream_push: null argument");
  return guarded([&] {
    if (written) *written = 0;
    if (stream->stream.stats().flushed)
      return fail(LLVC_ERR_STATE, "push after flush; reset the stream first");
    const size_t expected = stream->stream.output_for_push(count);
    if (expected > capacity || (expected > 0 && !out))
      return fail(LLVC_ERR_BUFFER, "push would emit " + std::to_string(expected) +
                                       " samples, buffer holds " + std::to_string(capacity));
    const auto emitted = stream->stream.push(std::span<const float>(in, count));
    std::copy(emitted.begin(), emitted.end(), out);
    if (written) *written = emitted.size();
    return LLVC_OK;
  });
}

llvc_status llvc_stream_flush(llvc_stream* stream, float* out, size_t capacity, size_t* written) {
  LLVC_REQUIRE(stream, "llvc_stream_flush: stream is null");
  return guarded([&] {
    if (written) *written = 0;
    if (stream->stream.stats().flushed) return fail(LLVC_ERR_STATE, "stream already flushed");
    const size_t expected = stream->stream.output_for_flush();
    if (expected > capacity || (expected > 0 && !out))
      return fail(LLVC_ERR_BUFFER, "flush would emit " + std::to_string(expected) +
                                       " samples, buffer holds " + std::to_string(capacity));
    const auto emitted = stream->stream.flush();
    std::copy(emitted.begin(), emitted.end(), out);
    if (written) *written = emitted.size();
    return LLVC_OK;
  });
}

llvc_status llvc_stream_reset(llvc_stream* stream) {
  LLVC_REQUIRE(stream, "llvc_stream_reset: stream is null");
  return guarded([&] {
    stream->stream.reset();
    return LLVC_OK;
  });
}

llvc_status llvc_stream_stats_get(const llvc_stream* stream, llvc_stream_stats* out) {
  LLVC_REQUIRE(stream && out, "llvc_stream_stats_get: null argument");
  const auto& s = stream->stream.stats();
  out->samples_in = s.samples_in;
  out->samples_out = s.samples_out;
  out->clamped_inputs = s.clamped_inputs;
  out->calls = s.calls;
  out->chunks = s.chunks;
  out->pending = stream->stream.pending();
  out->flushed = s.flushed ? 1 : 0;
  return LLVC_OK;
}

llvc_status llvc_stream_latency_seconds(const llvc_stream* stream, double* seconds) {
  LLVC_REQUIRE(stream && seconds, "llvc_stream_latency_seconds: null argument");
  *seconds = stream->stream.algorithmic_latency_s();
  return LLVC_OK;
}

llvc_status llvc_stream_debug_set_prenet_skew(llvc_stream* stream, uint32_t samples) {
  LLVC_REQUIRE(stream, "llvc_stream_debug_set_prenet_skew: stream is null");
  stream->stream.set_prenet_skew(samples);
  return LLVC_OK;
}

llvc_status llvc_wav_read(const char* path, uint32_t expected_rate, float** samples, size_t* count,
                          uint32_t* sample_rate) {
  LLVC_REQUIRE(path && samples && count, "llvc_wav_read: null argument");
  return guarded([&] {
    llvc::AudioBuffer buffer = llvc::read_wav(path, expected_rate);
    float* data = static_cast<float*>(std::malloc(std::max<size_t>(1, buffer.samples.size()) * sizeof(float)));
    if (!data) return fail(LLVC_ERR_INTERNAL, "out of memory");
    std::copy(buffer.samples.begin(), buffer.samples.end(), data);
    *samples = data;
    *count = buffer.samples.size();
    if (sample_rate) *sample_rate = buffer.sample_rate;
    return LLVC_OK;
  });
}

llvc_status llvc_wav_write(const char* path, const float* samples, size_t count, uint32_t sample_rate) {
  LLVC_REQUIRE(path && (count == 0 || samples), "llvc_wav_write: null argument");
  return guarded([&] {
    llvc::AudioBuffer buffer{std::vector<float>(samples, samples + count), sample_rate};
    llvc::write_wav(path, buffer);
    return LLVC_OK;
  });
}

void llvc_free_samples(float* samples) { std::free(samples); }

llvc_status llvc_mel_distance(const float* x, const float* y, size_t count, uint32_t sample_rate,
                              double* distance) {
  LLVC_REQUIRE(distance && (count == 0 || (x && y)), "llvc_mel_distance: null argument");
  return guarded([&] {
    *distance = llvc::mel_distance(std::span<const float>(x, count), std::span<const float>(y, count),
                                   llvc::MelConfig::for_rate(sample_rate));
    return LLVC_OK;
  });
}

llvc_status llvc_snr_db(const float* reference, const float* test, size_t count, double* db) {
  LLVC_REQUIRE(db && (count == 0 || (reference && test)), "llvc_snr_db: null argument");
  return guarded([&] {
    *db = llvc::snr_db(std::span<const float>(reference, count), std::span<const float>(test, count));
    return LLVC_OK;
  });
}

}  // extern "C"
