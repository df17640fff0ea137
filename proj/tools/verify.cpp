// Property suite behind `llvc verify`. Everything here goes through the C API.
#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cli_common.hpp"

namespace llvc::cli {
namespace {

struct Reporter {
  int failures = 0;
  void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
  }
};

std::vector<float> noise(size_t count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
  std::vector<float> x(count);
  for (float& v : x) v = dist(rng);
  return x;
}

bool same_bytes(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

std::string snr_text(const std::vector<float>& ref, const std::vector<float>& test) {
  if (same_bytes(ref, test)) return "inf";
  if (ref.size() != test.size()) return "length mismatch";
  double db = 0.0;
  if (llvc_snr_db(ref.data(), test.data(), ref.size(), &db) != LLVC_OK) return "n/a";
  std::ostringstream os;
  os << db;
  return os.str();
}

StreamPtr make_stream(const llvc_model* model, unsigned n, unsigned skew) {
  StreamPtr s = new_stream(model, n);
  if (skew) check(llvc_stream_debug_set_prenet_skew(s.get(), skew), kUsage, "fault hook");
  return s;
}

// Pushes in random slices of 1..max_slice samples, then flushes.
std::vector<float> stream_sliced(llvc_stream* s, const std::vector<float>& x, std::mt19937_64& rng,
                                 size_t max_slice) {
  std::uniform_int_distribution<size_t> len(1, max_slice);
  std::vector<float> out, buf;
  size_t pos = 0;
  while (pos < x.size()) {
    size_t n = std::min(len(rng), x.size() - pos);
    buf.resize(llvc_stream_output_for_push(s, n));
    size_t written = 0;
    check(llvc_stream_push(s, x.data() + pos, n, buf.data(), buf.size(), &written), kPropertyFailure, "push");
    out.insert(out.end(), buf.begin(), buf.begin() + long(written));
    pos += n;
  }
  buf.resize(llvc_stream_output_for_flush(s));
  size_t written = 0;
  check(llvc_stream_flush(s, buf.data(), buf.size(), &written), kPropertyFailure, "flush");
  out.insert(out.end(), buf.begin(), buf.begin() + long(written));
  return out;
}

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void latency_law(Reporter& r, const llvc_model* model, const llvc_geometry& g, unsigned n, unsigned skew,
                 uint64_t seed) {
  const size_t expected = size_t(n) * g.chunk_samples + g.lookahead_samples;
  std::vector<float> x = noise(expected + g.chunk_samples, seed);
  StreamPtr s = make_stream(model, n, skew);
  std::vector<float> buf(size_t(n) * g.chunk_samples);
  size_t first = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    size_t written = 0;
    check(llvc_stream_push(s.get(), &x[i], 1, buf.data(), buf.size(), &written), kPropertyFailure, "push");
    if (written) {
      first = i + 1;
      break;
    }
  }
  const double lat = latency_s(g, n);
  const double law = lat * g.sample_rate;
  std::ostringstream os;
  os << "first output after " << first << " samples, law " << law << " samples (" << format_ms(lat * 1e3)
     << " ms, N=" << n << ")";
  r.report(first == expected && std::llround(law) == long(expected) && law == double(expected), "latency_law",
           os.str());
}

void chunking(Reporter& r, const llvc_model* model, const std::vector<float>& x, const std::vector<float>& whole,
              unsigned n, unsigned skew, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  bool ok = true;
  size_t max_diff_runs = 0;
  for (size_t max_slice : {size_t(1), size_t(97), size_t(1000), size_t(5000)}) {
    if (max_slice == 1 && x.size() > 16000) continue;  // keep the 1-sample run short
    StreamPtr s = make_stream(model, n, skew);
    if (!same_bytes(stream_sliced(s.get(), x, rng, max_slice), whole)) {
      ok = false;
      ++max_diff_runs;
    }
  }
  std::ostringstream os;
  os << "random slice sizes vs single push, " << max_diff_runs << " mismatching runs";
  r.report(ok, "chunking_invariance", os.str());

  bool batch_ok = true;
  std::ostringstream bs;
  bs << "N";
  for (unsigned m : {1u, 2u, 4u}) {
    if (m == n) continue;
    StreamPtr s = make_stream(model, m, skew);
    std::vector<float> y = stream_all(s.get(), x.data(), x.size());
    bool same = same_bytes(y, whole);
    batch_ok = batch_ok && same;
    bs << " " << m << (same ? "=" : "!=") << n;
  }
  r.report(batch_ok, "batching_invariance", bs.str());
}

void causality(Reporter& r, const llvc_model* model, const llvc_geometry& g, const std::vector<float>& x,
               const std::vector<float>& base, unsigned n, unsigned skew, unsigned probes, uint64_t seed) {
  const size_t chunk = g.chunk_samples, window = chunk + g.lookahead_samples;
  const size_t batch = size_t(n) * chunk + g.lookahead_samples;
  std::mt19937_64 rng(seed ^ 0xca5a1ULL);
  unsigned broken = 0, checked = 0;
  size_t compared = 0;
  if (!x.empty()) {
    std::uniform_int_distribution<size_t> pick(0, x.size() - 1);
    for (unsigned k = 0; k < probes; ++k) {
      const size_t p = pick(rng);
      // Chunks whose window [c*chunk, c*chunk + window) ends at or before p.
      const size_t c_max = p >= window ? (p - window) / chunk + 1 : 0;
      const size_t keep = c_max * chunk;
      std::vector<float> y(x.begin(), x.begin() + long(std::min(x.size(), p + batch + skew + 1)));
      y[p] = y[p] > 0.0f ? y[p] - 0.5f : y[p] + 0.5f;
      StreamPtr s = make_stream(model, n, skew);
      std::vector<float> out(llvc_stream_output_for_push(s.get(), y.size()));
      size_t written = 0;
      check(llvc_stream_push(s.get(), y.data(), y.size(), out.data(), out.size(), &written), kPropertyFailure,
            "push");
      ++checked;
      compared += keep;
      if (written < keep || std::memcmp(out.data(), base.data(), keep * sizeof(float)) != 0) ++broken;
    }
  }
  std::ostringstream os;
  os << checked << " probes, " << compared << " samples compared, " << broken << " changed before p";
  r.report(broken == 0, "causality", os.str());
}

void flush_length(Reporter& r, const llvc_model* model, const std::vector<float>& x, unsigned n, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xf105ULL);
  std::vector<size_t> lengths{x.size()};
  if (!x.empty()) {
    std::uniform_int_distribution<size_t> pick(1, x.size());
    for (int i = 0; i < 8; ++i) lengths.push_back(pick(rng));
  }
  bool ok = true;
  std::ostringstream os;
  os << "in/out";
  for (size_t len : lengths) {
    StreamPtr s = new_stream(model, n);
    size_t out = stream_all(s.get(), x.data(), len).size();
    llvc_stream_stats st{};
    llvc_stream_stats_get(s.get(), &st);
    ok = ok && out == len && st.samples_out == st.samples_in && st.flushed;
    os << " " << len << "/" << out;
  }
  r.report(ok, "flush_length", os.str());
}

void round_trip(Reporter& r, const llvc_model* model, const std::vector<float>& x) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "llvc-verify-" + std::to_string(::getpid());
  const fs::path a = dir / (stem + "-a.llvc"), b = dir / (stem + "-b.llvc");
  check(llvc_model_save(model, a.string().c_str()), kPropertyFailure, "save");
  ModelPtr reloaded = load_model(a.string());
  check(llvc_model_save(reloaded.get(), b.string().c_str()), kPropertyFailure, "save");
  const std::vector<char> fa = file_bytes(a), fb = file_bytes(b);
  std::vector<float> probe(x.begin(), x.begin() + long(std::min<size_t>(x.size(), 4800)));
  const bool same_out = same_bytes(offline(model, probe), offline(reloaded.get(), probe));
  std::error_code ec;
  fs::remove(a, ec);
  fs::remove(b, ec);
  std::ostringstream os;
  os << fa.size() << " bytes, resave " << (fa == fb ? "identical" : "differs") << ", outputs "
     << (same_out ? "identical" : "differ");
  r.report(!fa.empty() && fa == fb && same_out, "weight_round_trip", os.str());
}

}  // namespace

int run_verify(const VerifyOptions& opt) {
  if (!(opt.duration >= 0.0)) throw Failure(kUsage, "duration must be >= 0");
  if (opt.chunks_per_call == 0) throw Failure(kUsage, "chunks per call must be >= 1");
  ModelPtr model = load_model(opt.model);
  const llvc_geometry g = geometry(model.get());
  const unsigned n = opt.chunks_per_call, skew = opt.fault_skew;
  const std::vector<float> x = noise(size_t(std::llround(opt.duration * g.sample_rate)), opt.seed);

  Reporter r;
  latency_law(r, model.get(), g, n, skew, opt.seed);

  StreamPtr s = make_stream(model.get(), n, skew);
  const std::vector<float> whole = stream_all(s.get(), x.data(), x.size());
  chunking(r, model.get(), x, whole, n, skew, opt.seed);

  const std::vector<float> ref = offline(model.get(), x);
  r.report(same_bytes(whole, ref), "offline_equivalence",
           std::to_string(x.size()) + " samples, snr " + snr_text(ref, whole) + " dB");

  causality(r, model.get(), g, x, whole, n, skew, opt.probes, opt.seed);
  flush_length(r, model.get(), x, n, opt.seed);
  round_trip(r, model.get(), x);

  std::cout << (r.failures ? "verify: " + std::to_string(r.failures) + " properties failed" : "verify: all properties passed")
            << std::endl;
  return r.failures ? kPropertyFailure : kOk;
}

}  // namespace llvc::cli
