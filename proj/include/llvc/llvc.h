/*
 * llvc: streaming voice-conversion inference engine, C interface.
 *
 * All objects are opaque handles. Every fallible call returns an
 * llvc_status; on failure llvc_last_error() describes the problem for the
 * calling thread. Models are immutable after creation and may be shared by
 * any number of streams on any threads. A stream must be used by one thread
 * at a time.
 */
#ifndef LLVC_LLVC_H
#define LLVC_LLVC_H

#include <stddef.h>
#include <stdint.h>

#if defined(LLVC_BUILDING_LIBRARY)
#define LLVC_API __attribute__((visibility("default")))
#else
#define LLVC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum llvc_status {
  LLVC_OK = 0,
  LLVC_ERR_PARAMETER = 1,
  LLVC_ERR_DIMENSION = 2,
  LLVC_ERR_CONFIG = 3,
  LLVC_ERR_STATE = 4,
  LLVC_ERR_FRAMING = 5,
  LLVC_ERR_FORMAT = 6,       /* not a weight file */
  LLVC_ERR_VERSION = 7,      /* unsupported weight file version */
  LLVC_ERR_INCONSISTENT = 8, /* tensors do not match the embedded config */
  LLVC_ERR_BOUNDS = 9,       /* tensor data extends past the end of file */
  LLVC_ERR_IO = 10,
  LLVC_ERR_AUDIO = 11,       /* unsupported or malformed WAV */
  LLVC_ERR_RATE = 12,        /* WAV sample rate differs from the model */
  LLVC_ERR_BUFFER = 13,      /* caller-provided output buffer too small */
  LLVC_ERR_INTERNAL = 14
} llvc_status;

typedef struct llvc_model llvc_model;
typedef struct llvc_stream llvc_stream;

typedef struct llvc_geometry {
  uint32_t sample_rate;
  uint32_t hop;               /* L */
  uint32_t dec_chunk_len;
  uint32_t chunk_samples;     /* dec_chunk_len * L */
  uint32_t lookahead_samples; /* 2L */
} llvc_geometry;

typedef struct llvc_stream_stats {
  uint64_t samples_in;
  uint64_t samples_out;
  uint64_t clamped_inputs;
  uint64_t calls;
  uint64_t chunks;
  uint64_t pending;
  int flushed;
} llvc_stream_stats;

LLVC_API const char* llvc_version(void);
LLVC_API const char* llvc_status_string(llvc_status status);
/* Message for the most recent failure on this thread; "" if none. */
LLVC_API const char* llvc_last_error(void);

/* ---- models -------------------------------------------------------- */

/* Random weights from a JSON config (NULL or "" for defaults). */
LLVC_API llvc_status llvc_model_init_random(const char* config_json, uint64_t seed, llvc_model** out);
LLVC_API llvc_status llvc_model_load(const char* path, llvc_model** out);
LLVC_API llvc_status llvc_model_save(const llvc_model* model, const char* path);
LLVC_API void llvc_model_free(llvc_model* model);

/* Copies the config JSON (NUL-terminated) into buf. *needed receives the
 * required size including the terminator; buf may be NULL to query it. */
LLVC_API llvc_status llvc_model_config_json(const llvc_model* model, char* buf, size_t capacity,
                                            size_t* needed);
LLVC_API llvc_status llvc_model_geometry(const llvc_model* model, llvc_geometry* out);
LLVC_API llvc_status llvc_model_counts(const llvc_model* model, size_t* tensors, size_t* parameters);

/* (N * dec_chunk_len * L + 2L) / sample_rate. */
LLVC_API llvc_status llvc_latency_seconds(uint32_t sample_rate, uint32_t hop, uint32_t dec_chunk_len,
                                          uint32_t chunks_per_call, double* seconds);

/* Whole-signal reference conversion; out receives exactly `count` samples. */
LLVC_API llvc_status llvc_forward_offline(const llvc_model* model, const float* in, size_t count,
                                          float* out);

/* ---- streams ------------------------------------------------------- */

LLVC_API llvc_status llvc_stream_new(const llvc_model* model, uint32_t chunks_per_call, llvc_stream** out);
LLVC_API void llvc_stream_free(llvc_stream* stream);

/* Exact number of samples the next push of `count` samples (or the next
 * flush) will emit. */
LLVC_API size_t llvc_stream_output_for_push(const llvc_stream* stream, size_t count);
LLVC_API size_t llvc_stream_output_for_flush(const llvc_stream* stream);

/* Pushes samples and writes any emitted output. Fails with
 * LLVC_ERR_BUFFER, consuming nothing, if capacity is too small. */
LLVC_API llvc_status llvc_stream_push(llvc_stream* stream, const float* in, size_t count, float* out,
                                      size_t capacity, size_t* written);
/* Zero-pads and emits the remainder; the stream is then terminal. */
LLVC_API llvc_status llvc_stream_flush(llvc_stream* stream, float* out, size_t capacity, size_t* written);
LLVC_API llvc_status llvc_stream_reset(llvc_stream* stream);
LLVC_API llvc_status llvc_stream_stats_get(const llvc_stream* stream, llvc_stream_stats* out);
LLVC_API llvc_status llvc_stream_latency_seconds(const llvc_stream* stream, double* seconds);

/* Test hook: makes the prenet read `samples` ahead of the current input
 * position. Used to check that the causality probe catches leaks. */
LLVC_API llvc_status llvc_stream_debug_set_prenet_skew(llvc_stream* stream, uint32_t samples);

/* ---- audio and metrics ---------------------------------------------- */

/* Reads a mono PCM16/float32 WAV. expected_rate 0 accepts any rate.
 * *samples is allocated by the library; release with llvc_free_samples. */
LLVC_API llvc_status llvc_wav_read(const char* path, uint32_t expected_rate, float** samples, size_t* count,
                                   uint32_t* sample_rate);
LLVC_API llvc_status llvc_wav_write(const char* path, const float* samples, size_t count, uint32_t sample_rate);
LLVC_API void llvc_free_samples(float* samples);

/* Multi-resolution log-mel L1 distance with default resolutions. */
LLVC_API llvc_status llvc_mel_distance(const float* x, const float* y, size_t count, uint32_t sample_rate,
                                       double* distance);
/* Returns +infinity for bit-identical inputs. */
LLVC_API llvc_status llvc_snr_db(const float* reference, const float* test, size_t count, double* db);

#ifdef __cplusplus
}
#endif

#endif /* LLVC_LLVC_H */
