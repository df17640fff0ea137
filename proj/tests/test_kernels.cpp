#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "kernels.hpp"
#include "oracles.hpp"

using namespace llvc;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an llvc::Error");
  return ErrorCode::Parameter;
}

Tensor cols(const Tensor& x, size_t from, size_t to) {
  Tensor y({x.dim(0), to - from});
  for (size_t r = 0; r < x.dim(0); ++r)
    for (size_t c = from; c < to; ++c) y.at(r, c - from) = x.at(r, c);
  return y;
}

Tensor hcat(const Tensor& a, const Tensor& b) {
  Tensor y({a.dim(0), a.dim(1) + b.dim(1)});
  for (size_t r = 0; r < a.dim(0); ++r) {
    std::copy_n(a.row(r), a.dim(1), y.row(r));
    std::copy_n(b.row(r), b.dim(1), y.row(r) + a.dim(1));
  }
  return y;
}

}  // namespace

TEST_CASE("causal_conv1d examples") {
  ConvCache none = ConvCache::zeros(1, 0);
  Tensor y = causal_conv1d(Tensor::matrix(1, 3, {1, 2, 3}), Tensor({1, 1, 1}, {1}), Tensor::vector({0}), 1, none);
  CHECK(y == Tensor::matrix(1, 3, {1, 2, 3}));

  ConvCache zero = ConvCache::zeros(1, 1);
  y = causal_conv1d(Tensor::matrix(1, 3, {1, 2, 3}), Tensor({1, 1, 2}, {1, 1}), Tensor::vector({0}), 1, zero);
  CHECK(y == Tensor::matrix(1, 3, {1, 3, 5}));
  CHECK(zero.frames == Tensor::matrix(1, 1, {3}));

  ConvCache five{Tensor::matrix(1, 1, {5})};
  y = causal_conv1d(Tensor::matrix(1, 1, {1}), Tensor({1, 1, 2}, {1, 1}), Tensor::vector({0}), 1, five);
  CHECK(y == Tensor::matrix(1, 1, {6}));
  CHECK(five.frames == Tensor::matrix(1, 1, {1}));
}

TEST_CASE("causal_conv1d errors") {
  ConvCache c = ConvCache::zeros(2, 2);
  CHECK(code_of([&] { causal_conv1d(Tensor({3, 4}), Tensor({1, 2, 3}), Tensor({1}), 1, c); }) ==
        ErrorCode::Dimension);
  ConvCache wrong = ConvCache::zeros(2, 1);
  CHECK(code_of([&] { causal_conv1d(Tensor({2, 4}), Tensor({1, 2, 3}), Tensor({1}), 1, wrong); }) ==
        ErrorCode::Dimension);
}

TEST_CASE("causal_conv1d matches oracle, and split runs equal whole runs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const size_t groups = trial % 3 == 0 ? 2 : 1;
    const size_t c_in = 2 * (1 + rng() % 3), c_out = groups * (1 + rng() % 3), taps = 1 + rng() % 4;
    const size_t d = 1 + rng() % 3, steps = 1 + rng() % 20;
    Tensor w = oracle::random_tensor({c_out, c_in / groups, taps}, rng);
    Tensor b = oracle::random_tensor({c_out}, rng);
    Tensor x = oracle::random_tensor({c_in, steps}, rng);
    ConvCache cache = ConvCache::zeros(c_in, (taps - 1) * d);
    Tensor y = causal_conv1d(x, w, b, d, cache, groups);
    CHECK(oracle::max_abs_diff(oracle::causal_conv(oracle::to_mat(x), w, b, d, groups), y) <= 1e-5);

    const size_t split = rng() % (steps + 1);
    ConvCache c2 = ConvCache::zeros(c_in, (taps - 1) * d);
    Tensor y1 = causal_conv1d(cols(x, 0, split), w, b, d, c2, groups);
    Tensor y2 = causal_conv1d(cols(x, split, steps), w, b, d, c2, groups);
    CHECK(hcat(y1, y2) == y);
    CHECK(c2.frames == cache.frames);
  }
}

TEST_CASE("causal_conv1d is causal") {
  std::mt19937_64 rng(3);
  Tensor w = oracle::random_tensor({4, 3, 3}, rng), b = oracle::random_tensor({4}, rng);
  Tensor x = oracle::random_tensor({3, 30}, rng);
  Tensor x2 = x;
  for (size_t r = 0; r < 3; ++r) x2.at(r, 17) += 1.0f;
  ConvCache c1 = ConvCache::zeros(3, 4), c2 = ConvCache::zeros(3, 4);
  Tensor y1 = causal_conv1d(x, w, b, 2, c1), y2 = causal_conv1d(x2, w, b, 2, c2);
  CHECK(cols(y1, 0, 17) == cols(y2, 0, 17));
  CHECK_FALSE(cols(y1, 17, 18) == cols(y2, 17, 18));
}

TEST_CASE("framing_conv examples") {
  Tensor avg({2, 1, 3}, std::vector<float>(6, 1.0f / 3.0f));
  std::vector<float> x(5, 3.0f);
  Tensor y = framing_conv(x, avg, Tensor({2}), 1);
  REQUIRE(y.shape() == std::vector<size_t>{2, 3});
  for (float v : y.values()) CHECK(v == doctest::Approx(3.0).epsilon(1e-6));

  std::vector<float> zeros(6 * 2 + 4, 0.0f);
  std::mt19937_64 rng(1);
  Tensor z = framing_conv(zeros, oracle::random_tensor({4, 1, 6}, rng), Tensor({4}), 2);
  CHECK(z.dim(1) == 6);
  for (float v : z.values()) CHECK(v == 0.0f);

  std::vector<float> seven(7, 1.0f);
  CHECK(code_of([&] { framing_conv(seven, Tensor({1, 1, 6}), Tensor({1}), 2); }) == ErrorCode::Framing);
  std::vector<float> short_input(4, 1.0f);
  CHECK(code_of([&] { framing_conv(short_input, Tensor({1, 1, 6}), Tensor({1}), 2); }) == ErrorCode::Framing);
}

TEST_CASE("synth_transpose_conv examples") {
  Tensor ones({1, 1, 3}, {1, 1, 1});
  Tensor tail({2});
  Tensor s = synth_transpose_conv(Tensor::matrix(1, 1, {2.5f}), ones, 1, tail);
  CHECK(s == Tensor::vector({2.5f}));
  CHECK(tail == Tensor::vector({2.5f, 2.5f}));
  s = synth_transpose_conv(Tensor::matrix(1, 1, {0.0f}), ones, 1, tail);
  CHECK(s == Tensor::vector({2.5f}));
  CHECK(tail == Tensor::vector({2.5f, 0.0f}));

  Tensor t0({4});
  s = synth_transpose_conv(Tensor({3, 5}), Tensor({3, 1, 6}, std::vector<float>(18, 1.0f)), 2, t0);
  CHECK(s.size() == 10);
  for (float v : s.values()) CHECK(v == 0.0f);
  for (float v : t0.values()) CHECK(v == 0.0f);

  Tensor bad({3});
  CHECK(code_of([&] { synth_transpose_conv(Tensor({1, 1}), ones, 1, bad); }) == ErrorCode::Dimension);
}

TEST_CASE("framing and synthesis match overlap-add oracles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t hop = 1 + rng() % 4, e = 1 + rng() % 5, n = 1 + rng() % 8;
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> x(n * hop + 2 * hop);
    for (float& v : x) v = u(rng);
    Tensor w = oracle::random_tensor({e, 1, 3 * hop}, rng), b = oracle::random_tensor({e}, rng);
    Tensor frames = framing_conv(x, w, b, hop);
    CHECK(frames.dim(1) == n);
    CHECK(oracle::max_abs_diff(oracle::framing(x, w, b, hop), frames) <= 1e-5);

    // Two calls with a carried tail equal the one-shot overlap-add.
    const size_t split = rng() % (n + 1);
    Tensor tail({2 * hop});
    Tensor a = synth_transpose_conv(cols(frames, 0, split), w, hop, tail);
    Tensor c = synth_transpose_conv(cols(frames, split, n), w, hop, tail);
    std::vector<double> ref = oracle::overlap_add(oracle::to_mat(frames), w, hop);
    double err = 0.0;
    for (size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(ref[i] - a[i]));
    for (size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(ref[split * hop + i] - c[i]));
    for (size_t i = 0; i < 2 * hop; ++i) err = std::max(err, std::abs(ref[n * hop + i] - tail[i]));
    CHECK(a.size() + c.size() == n * hop);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("layer_norm") {
  Tensor g = Tensor::vector({2, -1, 0.5f}), b = Tensor::vector({0.1f, 0.2f, 0.3f});
  CHECK(layer_norm(Tensor::vector({7, 7, 7}), g, b) == b);

  Tensor y = layer_norm(Tensor::vector({1, -1}), Tensor::vector({1, 1}), Tensor::vector({0, 0}), 0.0f);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(-1.0));

  std::mt19937_64 rng(5);
  Tensor x = oracle::random_tensor({257}, rng, 3.0f);
  Tensor n = layer_norm(x, Tensor({257}, 1.0f), Tensor({257}));
  double mean = 0.0, sq = 0.0;
  for (float v : n.values()) mean += v;
  mean /= 257.0;
  for (float v : n.values()) sq += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 1e-5);
  CHECK(std::abs(std::sqrt(sq / 257.0) - 1.0) < 1e-3);
}

TEST_CASE("layer_norm_channels equals per-column layer_norm") {
  std::mt19937_64 rng(9);
  Tensor x = oracle::random_tensor({24, 37}, rng, 2.0f);
  Tensor g = oracle::random_tensor({24}, rng), b = oracle::random_tensor({24}, rng);
  Tensor y = layer_norm_channels(x, g, b);
  for (size_t t = 0; t < 37; ++t) {
    Tensor col({24});
    for (size_t c = 0; c < 24; ++c) col[c] = x.at(c, t);
    Tensor ref = layer_norm(col, g, b);
    for (size_t c = 0; c < 24; ++c) CHECK(y.at(c, t) == ref[c]);
  }
}

TEST_CASE("linear") {
  std::mt19937_64 rng(2);
  Tensor x = oracle::random_tensor({5, 4}, rng);
  Tensor eye({4, 4});
  for (size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0f;
  CHECK(linear(x, eye, Tensor({4})) == x);

  Tensor bias = Tensor::vector({1, 2, 3});
  Tensor y = linear(x, Tensor({3, 4}), bias);
  for (size_t r = 0; r < 5; ++r)
    for (size_t c = 0; c < 3; ++c) CHECK(y.at(r, c) == bias[c]);

  CHECK(linear(Tensor::matrix(1, 1, {5}), Tensor::matrix(1, 1, {2}), Tensor::vector({3})) ==
        Tensor::matrix(1, 1, {13}));
  CHECK(code_of([&] { linear(x, Tensor({3, 5}), bias); }) == ErrorCode::Dimension);

  Tensor w = oracle::random_tensor({7, 4}, rng);
  CHECK(oracle::max_abs_diff(oracle::matmul_t(oracle::to_mat(x), w), linear(x, w)) <= 1e-5);
}

TEST_CASE("pointwise activations") {
  CHECK(gelu(0.0f) == 0.0f);
  for (float x : {-4.0f, -1.0f, -0.3f, 0.2f, 1.0f, 3.5f})
    CHECK(gelu(x) == doctest::Approx(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)))).epsilon(1e-5));

  Tensor sm = pointwise(Tensor::matrix(2, 4, std::vector<float>(8, 0.7f)), Activation::Softmax);
  for (float v : sm.values()) CHECK(v == doctest::Approx(0.25));
  std::mt19937_64 rng(4);
  Tensor r = pointwise(oracle::random_tensor({3, 9}, rng, 5.0f), Activation::Softmax);
  for (size_t i = 0; i < 3; ++i) CHECK(std::accumulate(r.row(i), r.row(i) + 9, 0.0) == doctest::Approx(1.0));

  Tensor p = pointwise(Tensor::vector({2, -4}), Activation::Prelu, 0.25f);
  CHECK(p == Tensor::vector({2, -1}));
  Tensor s = pointwise(Tensor::vector({0, 40, -40}), Activation::Sigmoid);
  CHECK(s[0] == 0.5f);
  CHECK(s[1] <= 1.0f);
  CHECK(s[2] >= 0.0f);
}

TEST_CASE("mha_causal examples") {
  Tensor eye({4, 4});
  for (size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0f;
  AttentionWeights id{&eye, &eye, &eye, &eye};

  Tensor frame = Tensor::matrix(1, 4, {0.1f, -0.2f, 0.3f, 0.4f});
  KvCache cache = KvCache::empty(4);
  CHECK(mha_causal(frame, id, 2, 10, cache) == frame);
  CHECK(cache.frames() == 1);

  std::mt19937_64 rng(8);
  Tensor two = oracle::random_tensor({2, 4}, rng);
  KvCache c1 = KvCache::empty(4), c2 = KvCache::empty(4);
  Tensor y_two = mha_causal(two, id, 2, 10, c1);
  Tensor y_one = mha_causal(Tensor({1, 4}, std::vector<float>(two.row(0), two.row(0) + 4)), id, 2, 10, c2);
  for (size_t d = 0; d < 4; ++d) CHECK(y_two.at(0, d) == y_one.at(0, d));

  // Zero query projection makes every score equal: outputs are running means.
  Tensor zero({4, 4});
  AttentionWeights uniform{&zero, &eye, &eye, &eye};
  Tensor x = oracle::random_tensor({5, 4}, rng);
  KvCache c3 = KvCache::empty(4);
  Tensor y = mha_causal(x, uniform, 1, 100, c3);
  for (size_t t = 0; t < 5; ++t)
    for (size_t d = 0; d < 4; ++d) {
      double mean = 0.0;
      for (size_t j = 0; j <= t; ++j) mean += x.at(j, d);
      CHECK(y.at(t, d) == doctest::Approx(mean / double(t + 1)).epsilon(1e-6));
    }

  KvCache c4 = KvCache::empty(6);
  CHECK(code_of([&] { mha_causal(Tensor({1, 6}), id, 4, 10, c4); }) == ErrorCode::Config);
}

TEST_CASE("mha_causal matches oracle across chunked calls and keeps a bounded cache") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t heads = 1 + rng() % 3, dim = heads * (1 + rng() % 4), n = 1 + rng() % 24, window = 1 + rng() % 8;
    Tensor wq = oracle::random_tensor({dim, dim}, rng), wk = oracle::random_tensor({dim, dim}, rng);
    Tensor wv = oracle::random_tensor({dim, dim}, rng), wo = oracle::random_tensor({dim, dim}, rng);
    AttentionWeights aw{&wq, &wk, &wv, &wo};
    Tensor x = oracle::random_tensor({n, dim}, rng);
    const oracle::Mat ref = oracle::attention(oracle::to_mat(x), wq, wk, wv, wo, heads, window);

    KvCache whole = KvCache::empty(dim);
    Tensor y = mha_causal(x, aw, heads, window, whole);
    CHECK(oracle::max_abs_diff(ref, y) <= 1e-5);
    CHECK(whole.frames() == std::min(window, n));

    KvCache cache = KvCache::empty(dim);
    Tensor joined({n, dim});
    for (size_t start = 0; start < n;) {
      const size_t len = std::min(n - start, size_t(1 + rng() % 5));
      Tensor part({len, dim});
      std::copy_n(x.row(start), len * dim, part.data());
      Tensor out = mha_causal(part, aw, heads, window, cache);
      std::copy_n(out.data(), len * dim, joined.row(start));
      CHECK(cache.frames() <= window);
      start += len;
    }
    CHECK(joined == y);
  }
}
