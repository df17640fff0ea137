#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "metrics.hpp"

using namespace llvc;

namespace {

std::vector<float> noise(size_t n, uint64_t seed, float amp) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, amp);
  std::vector<float> x(n);
  for (float& v : x) v = d(rng);
  return x;
}

double rms(const std::vector<float>& x) {
  double s = 0.0;
  for (float v : x) s += double(v) * v;
  return std::sqrt(s / double(x.size()));
}

// x plus the fixed noise shape scaled to the given level relative to x.
std::vector<float> with_noise(const std::vector<float>& x, const std::vector<float>& shape, double db) {
  const double gain = rms(x) / rms(shape) * std::pow(10.0, db / 20.0);
  std::vector<float> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = float(x[i] + gain * shape[i]);
  return y;
}

}  // namespace

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("stft magnitude") {
  const std::vector<float> hann = make_window(Window::Hann, 64);
  Tensor z = stft_magnitude(std::vector<float>(200, 0.0f), 64, 16, hann);
  CHECK(z.dim(1) == 33);
  CHECK(z.dim(0) == 1 + (200 - 64) / 16);
  for (float v : z.values()) CHECK(v == 0.0f);

  CHECK(stft_magnitude(std::vector<float>(10, 1.0f), 64, 16, hann).dim(0) == 1);

  const std::vector<float> rect = make_window(Window::Rectangular, 64);
  Tensor dc = stft_magnitude(std::vector<float>(64, 1.0f), 64, 16, rect);
  CHECK(dc.at(0, 0) == doctest::Approx(64.0));
  for (size_t k = 1; k < 33; ++k) CHECK(std::abs(dc.at(0, k)) < 1e-9);

  // Parseval for a one-sided spectrum of a real frame.
  const std::vector<float> x = noise(512, 1, 0.3f);
  Tensor s = stft_magnitude(x, 512, 128, make_window(Window::Hann, 512));
  const std::vector<float> w = make_window(Window::Hann, 512);
  double time = 0.0, freq = 0.0;
  for (size_t i = 0; i < 512; ++i) time += double(w[i] * x[i]) * (w[i] * x[i]);
  for (size_t k = 0; k <= 256; ++k) freq += (k == 0 || k == 256 ? 1.0 : 2.0) * double(s.at(0, k)) * s.at(0, k);
  CHECK(std::abs(freq / 512.0 - time) <= 1e-3 * time);
}

TEST_CASE("mel filterbank") {
  MelConfig cfg;
  Tensor fb = mel_filterbank(cfg, 1024);
  CHECK(fb.shape() == std::vector<size_t>{80, 513});
  size_t last_peak = 0;
  for (size_t m = 0; m < 80; ++m) {
    const float* r = fb.row(m);
    CHECK(std::accumulate(r, r + 513, 0.0) > 0.0);
    for (size_t k = 0; k < 513; ++k) CHECK(r[k] >= 0.0f);
    const size_t peak = size_t(std::max_element(r, r + 513) - r);
    if (m) CHECK(peak >= last_peak);
    last_peak = peak;
  }

  MelConfig one = cfg;
  one.n_mels = 1;
  Tensor single = mel_filterbank(one, 512);
  size_t nonzero = 0;
  for (float v : single.values()) nonzero += v > 0.0f;
  CHECK(nonzero > 200);

  MelConfig dense = cfg;
  dense.n_mels = 80;
  try {
    mel_filterbank(dense, 16);
    FAIL("expected degenerate band");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).find("band") != std::string::npos);
  }
  MelConfig bad = cfg;
  bad.f_max = 9000.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("mel distance") {
  MelConfig cfg;
  const std::vector<float> x = noise(16000, 2, 0.2f), y = noise(16000, 3, 0.2f);
  CHECK(mel_distance(x, x, cfg) == 0.0);
  CHECK(std::abs(mel_distance(x, y, cfg) - mel_distance(y, x, cfg)) <= 1e-7);
  CHECK(mel_distance(x, y, cfg) > 0.0);

  std::vector<float> nx(x), ny(y);
  for (float& v : nx) v = -v;
  for (float& v : ny) v = -v;
  CHECK(mel_distance(nx, ny, cfg) == doctest::Approx(mel_distance(x, y, cfg)).epsilon(1e-12));

  const std::vector<float> shape = noise(16000, 4, 1.0f);
  CHECK(mel_distance(x, with_noise(x, shape, -20.0), cfg) > mel_distance(x, with_noise(x, shape, -40.0), cfg));

  CHECK_THROWS_AS(mel_distance(std::vector<float>{}, std::vector<float>{}, cfg), Error);
  CHECK(mel_distance(std::vector<float>(100, 0.1f), std::vector<float>(100, 0.1f), cfg) == 0.0);
}

TEST_CASE("snr") {
  const std::vector<float> r{0.5f, -0.25f, 0.125f};
  CHECK(std::isinf(snr_db(r, r)));
  CHECK(snr_db(r, r) > 0);
  CHECK(snr_db(r, std::vector<float>(3, 0.0f)) == doctest::Approx(0.0));
  CHECK(snr_db(std::vector<float>{1, 0}, std::vector<float>{1, 0.1f}) == doctest::Approx(20.0).epsilon(1e-6));
  try {
    snr_db(std::vector<float>{0, 0}, std::vector<float>{1, 0});
    FAIL("expected parameter error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parameter);
  }
}
