#include "metrics.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace llvc {
namespace {

// FFTW's planner is not reentrant; execution on a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealFft {
  explicit RealFft(size_t n) : size(n) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(int(n), in, out, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size;
  double* in;
  fftw_complex* out;
  fftw_plan plan;
};

}  // namespace

MelConfig MelConfig::for_rate(uint32_t sample_rate) {
  MelConfig c;
  c.sample_rate = sample_rate;
  c.f_max = sample_rate / 2.0;
  return c;
}

void MelConfig::validate() const {
  if (sample_rate == 0) throw Error(ErrorCode::Config, "mel: sample rate must be positive");
  if (n_mels < 1) throw Error(ErrorCode::Config, "mel: n_mels must be >= 1");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0))
    throw Error(ErrorCode::Config, "mel: need 0 <= f_min < f_max <= F_s/2");
  if (fft_sizes.empty()) throw Error(ErrorCode::Config, "mel: no resolutions");
  for (size_t n : fft_sizes)
    if (n < 4) throw Error(ErrorCode::Config, "mel: fft size " + std::to_string(n) + " too small");
}

std::vector<float> make_window(Window kind, size_t length) {
  std::vector<float> w(length, 1.0f);
  if (kind == Window::Hann)
    for (size_t i = 0; i < length; ++i)
      w[i] = float(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(length)));
  return w;
}

Tensor stft_magnitude(std::span<const float> x, size_t fft_size, size_t hop, std::span<const float> window) {
  if (fft_size < 2 || hop < 1 || window.size() != fft_size)
    throw Error(ErrorCode::Parameter, "stft: invalid fft size, hop or window length");
  const size_t bins = fft_size / 2 + 1;
  const size_t frames = x.size() <= fft_size ? 1 : 1 + (x.size() - fft_size) / hop;

  RealFft fft(fft_size);
  Tensor mag({frames, bins});
  for (size_t f = 0; f < frames; ++f) {
    const size_t start = f * hop;
    for (size_t i = 0; i < fft_size; ++i)
      fft.in[i] = start + i < x.size() ? double(x[start + i]) * window[i] : 0.0;
    fftw_execute(fft.plan);
    for (size_t k = 0; k < bins; ++k) mag.at(f, k) = float(std::hypot(fft.out[k][0], fft.out[k][1]));
  }
  return mag;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor mel_filterbank(const MelConfig& config, size_t fft_size) {
  config.validate();
  const size_t bins = fft_size / 2 + 1;
  const double lo = hz_to_mel(config.f_min), hi = hz_to_mel(config.f_max);
  std::vector<double> edges(config.n_mels + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * double(i) / double(config.n_mels + 1));

  Tensor bank({config.n_mels, bins});
  for (size_t m = 0; m < config.n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    double total = 0.0;
    for (size_t k = 0; k < bins; ++k) {
      const double f = double(k) * config.sample_rate / double(fft_size);
      double v = 0.0;
      if (f > left && f <= centre) v = (f - left) / (centre - left);
      else if (f > centre && f < right) v = (right - f) / (right - centre);
      bank.at(m, k) = float(v);
      total += v;
    }
    if (!(total > 0.0))
      throw Error(ErrorCode::Config, "mel: band " + std::to_string(m) + " (" + std::to_string(left) + "-" +
                                         std::to_string(right) + " Hz) covers no FFT bin at size " +
                                         std::to_string(fft_size));
  }
  return bank;
}

double mel_distance(std::span<const float> x, std::span<const float> y, const MelConfig& config) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::Parameter, "mel_distance: empty input");
  if (x.size() != y.size()) throw Error(ErrorCode::Parameter, "mel_distance: inputs differ in length");
  config.validate();

  double total = 0.0;
  for (size_t fft_size : config.fft_sizes) {
    const size_t hop = fft_size / 4;
    const std::vector<float> window = make_window(Window::Hann, fft_size);
    const Tensor bank = mel_filterbank(config, fft_size);
    const Tensor mx = stft_magnitude(x, fft_size, hop, window);
    const Tensor my = stft_magnitude(y, fft_size, hop, window);
    const size_t frames = mx.dim(0), bins = mx.dim(1);

    double sum = 0.0;
    for (size_t f = 0; f < frames; ++f) {
      for (size_t m = 0; m < config.n_mels; ++m) {
        double px = 0.0, py = 0.0;
        for (size_t k = 0; k < bins; ++k) {
          const double w = bank.at(m, k);
          if (w == 0.0) continue;
          const double ax = mx.at(f, k), ay = my.at(f, k);
          px += w * ax * ax;
          py += w * ay * ay;
        }
        sum += std::abs(std::log(px + config.log_floor) - std::log(py + config.log_floor));
      }
    }
    total += sum / double(frames * config.n_mels);
  }
  return total / double(config.fft_sizes.size());
}

double snr_db(std::span<const float> reference, std::span<const float> test) {
  if (reference.size() != test.size()) throw Error(ErrorCode::Parameter, "snr_db: inputs differ in length");
  double signal = 0.0, noise = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    signal += double(reference[i]) * reference[i];
    const double d = double(reference[i]) - test[i];
    noise += d * d;
  }
  if (signal == 0.0) throw Error(ErrorCode::Parameter, "snr_db: reference is all zero");
  if (reference.size() && std::memcmp(reference.data(), test.data(), reference.size() * sizeof(float)) == 0)
    return std::numeric_limits<double>::infinity();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

}  // namespace llvc
