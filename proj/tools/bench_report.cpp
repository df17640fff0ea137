#include "bench_report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace llvc::tools {

double real_time_factor(double audio_seconds, double wall_seconds) {
  if (wall_seconds <= 0.0) return audio_seconds > 0.0 ? INFINITY : 0.0;
  return audio_seconds / wall_seconds;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * double(values.size()));
  const size_t index = rank < 1.0 ? 0 : std::min(values.size() - 1, size_t(rank) - 1);
  return values[index];
}

BenchEntry summarize(const FileTiming& timing) {
  BenchEntry e;
  e.path = timing.path;
  e.audio_seconds = timing.audio_seconds;
  e.wall_seconds = timing.wall_seconds;
  e.rtf = real_time_factor(timing.audio_seconds, timing.wall_seconds);
  e.chunks = timing.chunks;
  e.timed_calls = timing.call_ms.size();
  if (!timing.call_ms.empty())
    e.mean_chunk_compute_ms =
        std::accumulate(timing.call_ms.begin(), timing.call_ms.end(), 0.0) / double(timing.call_ms.size());
  e.p95_chunk_compute_ms = percentile(timing.call_ms, 95.0);
  return e;
}

BenchAggregate aggregate(const std::vector<BenchEntry>& entries, double algorithmic_latency_ms) {
  BenchAggregate agg;
  agg.algorithmic_latency_ms = algorithmic_latency_ms;
  double weighted = 0.0;
  unsigned long long calls = 0;
  for (const BenchEntry& e : entries) {
    agg.rtf_mean += e.rtf;
    weighted += e.mean_chunk_compute_ms * double(e.timed_calls);
    calls += e.timed_calls;
  }
  if (!entries.empty()) agg.rtf_mean /= double(entries.size());
  if (calls) agg.mean_chunk_compute_ms = weighted / double(calls);
  agg.end_to_end_latency_ms = agg.algorithmic_latency_ms + agg.mean_chunk_compute_ms;
  return agg;
}

nlohmann::ordered_json report_json(const std::vector<BenchEntry>& entries, const BenchAggregate& agg,
                                   const std::string& config_json, unsigned chunks_per_call,
                                   unsigned warmup, const std::string& hardware_note) {
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const BenchEntry& e : entries) {
    files.push_back({{"path", e.path},
                     {"audio_seconds", e.audio_seconds},
                     {"wall_seconds", e.wall_seconds},
                     {"rtf", e.rtf},
                     {"chunks", e.chunks},
                     {"timed_calls", e.timed_calls},
                     {"mean_chunk_compute_ms", e.mean_chunk_compute_ms},
                     {"p95_chunk_compute_ms", e.p95_chunk_compute_ms}});
  }
  nlohmann::ordered_json report;
  report["report_version"] = kReportVersion;
  report["files"] = std::move(files);
  report["aggregate"] = {{"rtf_mean", agg.rtf_mean},
                         {"algorithmic_latency_ms", agg.algorithmic_latency_ms},
                         {"mean_chunk_compute_ms", agg.mean_chunk_compute_ms},
                         {"end_to_end_latency_ms", agg.end_to_end_latency_ms},
                         {"chunks_per_call", chunks_per_call},
                         {"warmup_calls", warmup},
                         {"config", nlohmann::ordered_json::parse(config_json)},
                         {"hardware_note", hardware_note}};
  return report;
}

}  // namespace llvc::tools
