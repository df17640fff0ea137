// llvc command-line tool. Exit codes: 0 ok, 1 property failure, 2 usage or
// config error, 3 bad input data.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench_report.hpp"
#include "cli_common.hpp"

using namespace llvc::cli;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(kUsage, "cannot read config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cmd_init(const std::string& config_path, uint64_t seed, const std::string& output) {
  std::string json = config_path.empty() ? std::string() : read_text(config_path);
  llvc_model* raw = nullptr;
  check(llvc_model_init_random(json.c_str(), seed, &raw), kUsage, "init");
  ModelPtr model(raw);
  check(llvc_model_save(model.get(), output.c_str()), kUsage, "cannot write '" + output + "'");
  size_t tensors = 0, params = 0;
  check(llvc_model_counts(model.get(), &tensors, &params), kUsage, "counts");
  std::cout << "wrote " << output << "\n"
            << "tensors: " << tensors << "\n"
            << "parameters: " << params << "\n";
  return kOk;
}

int cmd_info(const std::string& path, bool as_json) {
  ModelPtr model = load_model(path);
  const llvc_geometry g = geometry(model.get());
  const std::string config = config_json(model.get());
  size_t tensors = 0, params = 0;
  check(llvc_model_counts(model.get(), &tensors, &params), kUsage, "counts");
  const double rate = g.sample_rate;
  if (as_json) {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(config);
    j["tensors"] = tensors;
    j["parameters"] = params;
    j["chunk_samples"] = g.chunk_samples;
    j["chunk_ms"] = g.chunk_samples * 1e3 / rate;
    j["lookahead_samples"] = g.lookahead_samples;
    j["lookahead_ms"] = g.lookahead_samples * 1e3 / rate;
    for (unsigned n : {1u, 2u, 4u})
      j["algorithmic_latency_ms"][std::to_string(n)] = latency_s(g, n) * 1e3;
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  std::cout << "model: " << path << "\n"
            << "config: " << config << "\n"
            << "tensors: " << tensors << "\n"
            << "parameters: " << params << "\n"
            << "sample rate: " << g.sample_rate << " Hz\n"
            << "chunk: " << g.chunk_samples << " samples / " << format_ms(g.chunk_samples * 1e3 / rate) << " ms ("
            << g.dec_chunk_len << " frames of " << g.hop << ")\n"
            << "lookahead: " << g.lookahead_samples << " samples / " << format_ms(g.lookahead_samples * 1e3 / rate)
            << " ms\n";
  for (unsigned n : {1u, 2u, 4u})
    std::cout << "algorithmic latency: " << format_ms(latency_s(g, n) * 1e3) << " ms (N=" << n << ")\n";
  return kOk;
}

int cmd_convert(const std::string& model_path, const std::string& input, const std::string& output,
                const std::string& mode, unsigned n, bool compare) {
  ModelPtr model = load_model(model_path);
  const llvc_geometry g = geometry(model.get());
  std::vector<float> x = read_audio(input, g.sample_rate);

  std::vector<float> y;
  StreamPtr stream;
  const auto t0 = Clock::now();
  if (mode == "offline") {
    y = offline(model.get(), x);
  } else {
    stream = new_stream(model.get(), n);
    y = stream_all(stream.get(), x.data(), x.size());
  }
  const double wall = elapsed_ms(t0, Clock::now()) / 1e3;
  check(llvc_wav_write(output.c_str(), y.data(), y.size(), g.sample_rate), kInputData,
        "cannot write '" + output + "'");

  const double seconds = double(x.size()) / g.sample_rate;
  std::cout << "mode=" << mode << " N=" << n << " samples_in=" << x.size() << " samples_out=" << y.size()
            << " audio_s=" << seconds << " wall_s=" << wall
            << " rtf=" << llvc::tools::real_time_factor(seconds, wall);
  if (stream) {
    llvc_stream_stats st{};
    llvc_stream_stats_get(stream.get(), &st);
    std::cout << " calls=" << st.calls << " chunks=" << st.chunks << " clamped=" << st.clamped_inputs;
  }
  if (compare) {
    std::vector<float> other;
    if (mode == "offline") {
      StreamPtr s = new_stream(model.get(), n);
      other = stream_all(s.get(), x.data(), x.size());
    } else {
      other = offline(model.get(), x);
    }
    double db = 0.0;
    llvc_status s = llvc_snr_db(other.data(), y.data(), y.size(), &db);
    std::cout << " snr_vs_" << (mode == "offline" ? "stream" : "offline") << "=";
    if (s == LLVC_OK)
      std::cout << db;
    else
      std::cout << "n/a";
  }
  std::cout << "\n";
  return kOk;
}

std::vector<std::string> bench_inputs(const std::string& input) {
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_directory(input, ec)) {
    for (const auto& e : fs::directory_iterator(input, ec))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input, ec)) {
    files.push_back(input);
  }
  return files;
}

// Streams one file in N-chunk slices. Only push and flush are timed.
llvc::tools::FileTiming bench_file(const llvc_model* model, const llvc_geometry& g, const std::string& path,
                                   const std::vector<float>& x, unsigned n, unsigned warmup) {
  const size_t slice = size_t(n) * g.chunk_samples;
  std::vector<float> buf(slice + g.lookahead_samples);
  size_t written = 0;
  if (warmup) {
    StreamPtr scratch = new_stream(model, n);
    std::vector<float> w(slice * warmup + g.lookahead_samples);
    for (size_t i = 0; i < w.size(); ++i) w[i] = x.empty() ? 0.0f : x[i % x.size()];
    for (size_t pos = 0; pos < w.size(); pos += slice) {
      const size_t k = std::min(slice, w.size() - pos);
      buf.resize(llvc_stream_output_for_push(scratch.get(), k));
      check(llvc_stream_push(scratch.get(), w.data() + pos, k, buf.data(), buf.size(), &written), kInputData,
            "warmup");
    }
  }

  llvc::tools::FileTiming t;
  t.path = path;
  t.audio_seconds = double(x.size()) / g.sample_rate;
  StreamPtr s = new_stream(model, n);
  double total_ms = 0.0;
  for (size_t pos = 0; pos < x.size(); pos += slice) {
    const size_t k = std::min(slice, x.size() - pos);
    buf.resize(llvc_stream_output_for_push(s.get(), k));
    const auto a = Clock::now();
    llvc_status st = llvc_stream_push(s.get(), x.data() + pos, k, buf.data(), buf.size(), &written);
    const double ms = elapsed_ms(a, Clock::now());
    check(st, kInputData, path);
    total_ms += ms;
    if (written) t.call_ms.push_back(ms);
  }
  buf.resize(llvc_stream_output_for_flush(s.get()));
  const auto a = Clock::now();
  check(llvc_stream_flush(s.get(), buf.data(), buf.size(), &written), kInputData, path);
  total_ms += elapsed_ms(a, Clock::now());
  llvc_stream_stats st{};
  llvc_stream_stats_get(s.get(), &st);
  t.chunks = st.chunks;
  t.wall_seconds = total_ms / 1e3;
  return t;
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("model name", 0) == 0) {
      auto pos = line.find(':');
      if (pos != std::string::npos) return line.substr(line.find_first_not_of(' ', pos + 1));
    }
  return "unknown cpu";
}

unsigned thread_cap() {
  const char* env = std::getenv("LLVC_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end || v < 1) throw Failure(kUsage, "LLVC_THREADS must be a positive integer");
  return unsigned(v);
}

int cmd_bench(const std::string& model_path, const std::string& input, unsigned n, const std::string& report,
              unsigned warmup, std::string note) {
  const std::vector<std::string> files = bench_inputs(input);
  if (files.empty()) throw Failure(kUsage, "no input files at '" + input + "'");
  ModelPtr model = load_model(model_path);
  const llvc_geometry g = geometry(model.get());

  // Read everything first so disk I/O never overlaps timing.
  std::vector<std::vector<float>> audio;
  for (const std::string& f : files) audio.push_back(read_audio(f, g.sample_rate));

  std::vector<llvc::tools::FileTiming> timings(files.size());
  const unsigned threads = std::min<unsigned>(thread_cap(), unsigned(files.size()));
  std::atomic<size_t> next{0};
  std::mutex error_lock;
  std::exception_ptr error;
  auto worker = [&] {
    for (size_t i; (i = next++) < files.size();) {
      try {
        timings[i] = bench_file(model.get(), g, files[i], audio[i], n, warmup);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_lock);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<llvc::tools::BenchEntry> entries;
  for (const auto& t : timings) entries.push_back(llvc::tools::summarize(t));
  const auto agg = llvc::tools::aggregate(entries, latency_s(g, n) * 1e3);
  if (note.empty()) note = cpu_model() + ", " + std::to_string(threads) + " thread(s)";
  const auto json = llvc::tools::report_json(entries, agg, config_json(model.get()), n, warmup, note);

  for (const auto& e : entries)
    std::cout << e.path << ": audio " << e.audio_seconds << " s, wall " << e.wall_seconds << " s, rtf " << e.rtf
              << ", mean chunk " << e.mean_chunk_compute_ms << " ms, p95 " << e.p95_chunk_compute_ms << " ms\n";
  std::cout << "rtf_mean=" << agg.rtf_mean << " mean_chunk_compute_ms=" << agg.mean_chunk_compute_ms
            << " algorithmic_latency_ms=" << format_ms(agg.algorithmic_latency_ms)
            << " end_to_end_latency_ms=" << agg.end_to_end_latency_ms << "\n";
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw Failure(kUsage, "cannot write report '" + report + "'");
    out << json.dump(2) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"llvc: streaming voice-conversion inference engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", llvc_version());

  std::string config, output, model, input, mode = "stream", report, note;
  uint64_t seed = 42;
  unsigned n = 1, warmup = 0;
  bool as_json = false, compare = false;
  VerifyOptions vopt;

  auto* init = app.add_subcommand("init", "write randomly initialized weights");
  init->add_option("--config", config, "model config JSON (defaults if omitted)");
  init->add_option("--seed", seed, "PRNG seed");
  init->add_option("--output,-o", output, "weight file to write")->required();

  auto* info = app.add_subcommand("info", "show model geometry and latency");
  info->add_option("--model,-m", model, "weight file")->required();
  info->add_flag("--json", as_json, "print JSON");

  auto* convert = app.add_subcommand("convert", "convert a WAV file");
  convert->add_option("--model,-m", model, "weight file")->required();
  convert->add_option("--input,-i", input, "input WAV")->required();
  convert->add_option("--output,-o", output, "output WAV")->required();
  convert->add_option("--mode", mode, "offline or stream");
  convert->add_option("--chunks-per-call,-N", n, "chunks per network call")->check(CLI::PositiveNumber);
  convert->add_flag("--compare", compare, "also run the other path and report SNR against it");

  auto* bench = app.add_subcommand("bench", "streaming real-time-factor benchmark");
  bench->add_option("--model,-m", model, "weight file")->required();
  bench->add_option("--input,-i", input, "WAV file or directory of WAV files")->required();
  bench->add_option("--chunks-per-call,-N", n, "chunks per network call")->check(CLI::PositiveNumber);
  bench->add_option("--report", report, "JSON report path");
  bench->add_option("--warmup", warmup, "untimed warmup calls per file");
  bench->add_option("--hardware-note", note, "free-text hardware description for the report");

  auto* verify = app.add_subcommand("verify", "run the streaming property suite");
  verify->add_option("--model,-m", vopt.model, "weight file")->required();
  verify->add_option("--seed", vopt.seed, "input noise seed");
  verify->add_option("--duration", vopt.duration, "seconds of noise input");
  verify->add_option("--chunks-per-call,-N", vopt.chunks_per_call, "chunks per network call")
      ->check(CLI::PositiveNumber);
  verify->add_option("--probes", vopt.probes, "causality probe count");
  // Test hook: makes the prenet read ahead so the causality check has something to catch.
  verify->add_option("--fault-prenet-skew", vopt.fault_skew)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*init) return cmd_init(config, seed, output);
    if (*info) return cmd_info(model, as_json);
    if (*convert) {
      if (mode != "offline" && mode != "stream") throw Failure(kUsage, "unknown mode '" + mode + "'");
      return cmd_convert(model, input, output, mode, n, compare);
    }
    if (*bench) return cmd_bench(model, input, n, report, warmup, note);
    if (*verify) return run_verify(vopt);
  } catch (const Failure& f) {
    std::cerr << "llvc: " << f.what() << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "llvc: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
