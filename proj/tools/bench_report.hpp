#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace llvc::tools {

struct FileTiming {
  std::string path;
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;  // push + flush compute only
  unsigned long long chunks = 0;
  std::vector<double> call_ms;  // one entry per timed network call
};

struct BenchEntry {
  std::string path;
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;
  double rtf = 0.0;
  unsigned long long chunks = 0;
  unsigned long long timed_calls = 0;
  double mean_chunk_compute_ms = 0.0;
  double p95_chunk_compute_ms = 0.0;
};

struct BenchAggregate {
  double rtf_mean = 0.0;
  double algorithmic_latency_ms = 0.0;
  double mean_chunk_compute_ms = 0.0;  // call-weighted over entries
  double end_to_end_latency_ms = 0.0;
};

/// Seconds of audio produced per second of compute.
double real_time_factor(double audio_seconds, double wall_seconds);

/// Nearest-rank percentile, p in [0, 100]. Empty input gives 0.
double percentile(std::vector<double> values, double p);

BenchEntry summarize(const FileTiming& timing);
BenchAggregate aggregate(const std::vector<BenchEntry>& entries, double algorithmic_latency_ms);

/// Versioned report; fields are only ever added.
nlohmann::ordered_json report_json(const std::vector<BenchEntry>& entries, const BenchAggregate& agg,
                                   const std::string& config_json, unsigned chunks_per_call,
                                   unsigned warmup, const std::string& hardware_note);

inline constexpr int kReportVersion = 1;

}  // namespace llvc::tools
