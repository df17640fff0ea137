#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "stream.hpp"
#include "weights_io.hpp"

using namespace llvc;

namespace {

std::shared_ptr<const Generator> default_model() {
  static auto g = std::make_shared<const Generator>(ModelConfig{}, random_init(ModelConfig{}, 42));
  return g;
}

std::shared_ptr<const Generator> small_model() {
  static const ModelConfig cfg = ModelConfig::from_json(
      R"({"L": 4, "dec_chunk_len": 6, "enc_dim": 16, "enc_layers": 3, "dec_dim": 8, "heads": 2,
          "ffn_dim": 16, "attn_window": 5, "prenet_channels": 4})");
  static auto g = std::make_shared<const Generator>(cfg, random_init(cfg, 11));
  return g;
}

std::vector<float> noise(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  std::vector<float> x(n);
  for (float& v : x) v = u(rng);
  return x;
}

void append(std::vector<float>& a, const std::vector<float>& b) { a.insert(a.end(), b.begin(), b.end()); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an llvc::Error");
  return ErrorCode::Parameter;
}

}  // namespace

TEST_CASE("construction") {
  Stream s(default_model(), 1);
  CHECK(s.pending() == 0);
  CHECK(s.stats().samples_in == 0);
  CHECK(s.algorithmic_latency_s() == 0.015);
  CHECK(code_of([] { Stream bad(default_model(), 0); }) == ErrorCode::Parameter);
  CHECK(Stream(default_model(), 2).algorithmic_latency_s() == 0.029);
}

TEST_CASE("emission threshold") {
  Stream s(default_model(), 1);
  std::vector<float> x = noise(240, 1);
  CHECK(s.output_for_push(239) == 0);
  CHECK(s.push(std::span<const float>(x).first(239)).empty());
  CHECK(s.output_for_push(1) == 224);
  CHECK(s.push(std::span<const float>(x).subspan(239)).size() == 224);
  CHECK(s.pending() == 16);

  Stream bulk(default_model(), 1);
  CHECK(bulk.push(x).size() == 224);
  CHECK(bulk.pending() == 16);
  CHECK(bulk.output_for_flush() == 16);
  CHECK(bulk.flush().size() == 16);
  CHECK(bulk.stats().samples_out == 240);
}

TEST_CASE("one-sample pushes equal one bulk push") {
  std::vector<float> x = noise(240, 2);
  Stream a(default_model(), 1), b(default_model(), 1);
  std::vector<float> one = a.push(x), many;
  for (float v : x) append(many, b.push(std::span<const float>(&v, 1)));
  CHECK(many == one);
}

TEST_CASE("flush accounting") {
  Stream s(default_model(), 1);
  CHECK(s.push(noise(100, 3)).empty());
  CHECK(s.flush().size() == 100);
  CHECK(s.stats().flushed);
  CHECK(code_of([&] { s.flush(); }) == ErrorCode::State);
  CHECK(code_of([&] { s.push(noise(5, 1)); }) == ErrorCode::State);

  Stream empty(default_model(), 1);
  CHECK(empty.flush().empty());
}

TEST_CASE("chunking and batching invariance against the offline path") {
  auto g = small_model();
  std::vector<float> x = noise(1777, 4);
  const std::vector<float> ref = g->forward_offline(x);
  std::mt19937_64 rng(5);
  for (uint32_t n : {1u, 2u, 3u, 4u}) {
    for (int rep = 0; rep < 3; ++rep) {
      Stream s(g, n);
      std::vector<float> out;
      for (size_t pos = 0; pos < x.size();) {
        size_t len = std::min(x.size() - pos, size_t(rng() % 90));
        const size_t expected = s.output_for_push(len);
        std::vector<float> y = s.push(std::span<const float>(x).subspan(pos, len));
        CHECK(y.size() == expected);
        CHECK(s.pending() < n * g->config().chunk_samples() + g->config().lookahead_samples());
        CHECK(s.stats().samples_out <= s.stats().samples_in);
        append(out, y);
        pos += len;
      }
      append(out, s.flush());
      CHECK(out == ref);
      CHECK(s.stats().samples_out == s.stats().samples_in);
    }
  }
}

TEST_CASE("independent streams over shared weights") {
  auto g = small_model();
  std::vector<float> x = noise(900, 6), y = noise(700, 7);
  Stream a(g, 1), b(g, 2);
  std::vector<float> oa, ob;
  for (size_t i = 0; i < 900; i += 50) {
    append(oa, a.push(std::span<const float>(x).subspan(i, 50)));
    if (i < 700) append(ob, b.push(std::span<const float>(y).subspan(i, 50)));
  }
  append(oa, a.flush());
  append(ob, b.flush());
  CHECK(oa == g->forward_offline(x));
  CHECK(ob == g->forward_offline(y));
}

TEST_CASE("reset") {
  auto g = small_model();
  std::vector<float> x = noise(500, 8);
  Stream fresh(g, 1);
  std::vector<float> ref = fresh.push(x);

  Stream s(g, 1);
  s.push(noise(77, 9));
  s.reset();
  CHECK(s.stats().samples_in == 0);
  CHECK(s.pending() == 0);
  CHECK(s.push(x) == ref);
  s.flush();
  s.reset();
  CHECK(s.push(x) == ref);
}

TEST_CASE("out-of-range input is clamped and counted") {
  auto g = small_model();
  std::vector<float> x = noise(300, 10);
  x[3] = 4.0f;
  x[50] = -2.0f;
  Stream s(g, 1);
  std::vector<float> out = s.push(x);
  append(out, s.flush());
  CHECK(s.stats().clamped_inputs == 2);
  std::vector<float> clipped = x;
  clipped[3] = 1.0f;
  clipped[50] = -1.0f;
  CHECK(out == g->forward_offline(clipped));
  for (float v : out) CHECK(std::abs(v) <= 1.0f);

  Stream n(g, 1);
  std::vector<float> bad{0.1f, std::nanf("")};
  CHECK(code_of([&] { n.push(bad); }) == ErrorCode::Parameter);
}

TEST_CASE("prenet skew hook breaks equivalence only when enabled") {
  auto g = small_model();
  std::vector<float> x = noise(600, 12);
  Stream s(g, 1);
  s.set_prenet_skew(8);
  std::vector<float> out = s.push(x);
  append(out, s.flush());
  CHECK(out.size() == x.size());
  CHECK(out != g->forward_offline(x));
}
