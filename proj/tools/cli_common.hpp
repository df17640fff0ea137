#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <llvc/llvc.h>

namespace llvc::cli {

enum Exit : int { kOk = 0, kPropertyFailure = 1, kUsage = 2, kInputData = 3 };

struct Failure : std::runtime_error {
  Failure(int exit_code, const std::string& what) : std::runtime_error(what), code(exit_code) {}
  int code;
};

struct ModelDeleter {
  void operator()(llvc_model* m) const { llvc_model_free(m); }
};
struct StreamDeleter {
  void operator()(llvc_stream* s) const { llvc_stream_free(s); }
};
using ModelPtr = std::unique_ptr<llvc_model, ModelDeleter>;
using StreamPtr = std::unique_ptr<llvc_stream, StreamDeleter>;

inline std::string describe(llvc_status s) {
  std::string msg = llvc_last_error();
  return msg.empty() ? llvc_status_string(s) : msg;
}

// Throws with the given exit code unless s is LLVC_OK.
inline void check(llvc_status s, int exit_code, const std::string& context) {
  if (s != LLVC_OK) throw Failure(exit_code, context + ": " + describe(s));
}

inline ModelPtr load_model(const std::string& path) {
  llvc_model* m = nullptr;
  check(llvc_model_load(path.c_str(), &m), kUsage, "cannot load model '" + path + "'");
  return ModelPtr(m);
}

inline StreamPtr new_stream(const llvc_model* model, unsigned chunks_per_call) {
  llvc_stream* s = nullptr;
  check(llvc_stream_new(model, chunks_per_call, &s), kUsage, "cannot create stream");
  return StreamPtr(s);
}

inline llvc_geometry geometry(const llvc_model* model) {
  llvc_geometry g{};
  check(llvc_model_geometry(model, &g), kUsage, "geometry");
  return g;
}

inline std::string config_json(const llvc_model* model) {
  size_t needed = 0;
  check(llvc_model_config_json(model, nullptr, 0, &needed), kUsage, "config");
  std::string buf(needed, '\0');
  check(llvc_model_config_json(model, buf.data(), buf.size(), &needed), kUsage, "config");
  buf.resize(needed ? needed - 1 : 0);
  return buf;
}

inline double latency_s(const llvc_geometry& g, unsigned n) {
  double s = 0.0;
  check(llvc_latency_seconds(g.sample_rate, g.hop, g.dec_chunk_len, n, &s), kUsage, "latency");
  return s;
}

// Audio errors (bad WAV, wrong rate) are input-data failures.
inline std::vector<float> read_audio(const std::string& path, uint32_t rate) {
  float* data = nullptr;
  size_t count = 0;
  uint32_t actual = 0;
  llvc_status s = llvc_wav_read(path.c_str(), rate, &data, &count, &actual);
  check(s, kInputData, "cannot read '" + path + "'");
  std::vector<float> out(data, data + count);
  llvc_free_samples(data);
  return out;
}

// Pushes everything in one call and flushes.
inline std::vector<float> stream_all(llvc_stream* s, const float* in, size_t count) {
  std::vector<float> out(llvc_stream_output_for_push(s, count));
  size_t written = 0;
  check(llvc_stream_push(s, in, count, out.data(), out.size(), &written), kPropertyFailure, "push");
  out.resize(written);
  std::vector<float> tail(llvc_stream_output_for_flush(s));
  check(llvc_stream_flush(s, tail.data(), tail.size(), &written), kPropertyFailure, "flush");
  out.insert(out.end(), tail.begin(), tail.begin() + long(written));
  return out;
}

inline std::vector<float> offline(const llvc_model* model, const std::vector<float>& in) {
  std::vector<float> out(in.size());
  check(llvc_forward_offline(model, in.data(), in.size(), out.data()), kPropertyFailure, "offline");
  return out;
}

// "15.0" style for values on a 0.1 grid, more digits otherwise.
inline std::string format_ms(double ms) {
  char buf[64];
  const double tenths = ms * 10.0;
  if (std::abs(tenths - std::round(tenths)) < 1e-9)
    std::snprintf(buf, sizeof buf, "%.1f", ms);
  else
    std::snprintf(buf, sizeof buf, "%.4g", ms);
  return buf;
}

struct VerifyOptions {
  std::string model;
  uint64_t seed = 42;
  double duration = 2.0;
  unsigned chunks_per_call = 1;
  unsigned probes = 20;
  unsigned fault_skew = 0;
};

int run_verify(const VerifyOptions& opt);

}  // namespace llvc::cli
