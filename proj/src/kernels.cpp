#include "kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <cmath>
#include <string>

namespace llvc {
namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

// 16 output rows x 16 columns of accumulators per register tile.
typedef float Lanes __attribute__((vector_size(64)));
constexpr size_t kTile = 16;
constexpr size_t kRows = 16;
constexpr size_t kBlockCols = 64;

inline Lanes load_lanes(const float* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

size_t round_up(size_t v, size_t m) { return (v + m - 1) / m * m; }

// out[m][t] = bias[m] + sum_r w[m][r] * rows[r][t], r ascending.
// rows[r] must be readable for `cols` floats, cols a multiple of kTile.
// Only the column index is vectorized, so each output sees the same
// sequence of roundings whatever the number of columns.
void gemm_rows(size_t m_count, size_t r_count, size_t cols, const float* w,
               const float* const* rows, const float* bias, float* out) {
  // Column blocks keep a slice of every input row cache-resident while all
  // output rows sweep over it.
  for (size_t c0 = 0; c0 < cols; c0 += kBlockCols) {
    const size_t c1 = std::min(cols, c0 + kBlockCols);
    size_t m = 0;
    for (; m + kRows <= m_count; m += kRows) {
      for (size_t t0 = c0; t0 < c1; t0 += kTile) {
        Lanes acc[kRows];
        for (size_t i = 0; i < kRows; ++i) acc[i] = Lanes{} + (bias ? bias[m + i] : 0.0f);
        const float* wm = w + m * r_count;
        for (size_t r = 0; r < r_count; ++r) {
          const Lanes x = load_lanes(rows[r] + t0);
          for (size_t i = 0; i < kRows; ++i) acc[i] += wm[i * r_count + r] * x;
        }
        for (size_t i = 0; i < kRows; ++i) std::memcpy(out + (m + i) * cols + t0, &acc[i], sizeof(Lanes));
      }
    }
    for (; m < m_count; ++m) {
      const float* wr = w + m * r_count;
      for (size_t t0 = c0; t0 < c1; t0 += kTile) {
        Lanes acc = Lanes{} + (bias ? bias[m] : 0.0f);
        for (size_t r = 0; r < r_count; ++r) acc += wr[r] * load_lanes(rows[r] + t0);
        std::memcpy(out + m * cols + t0, &acc, sizeof(Lanes));
      }
    }
  }
}

// Affine map over the last dimension. Computed column-wise on the
// transposed input so the shared GEMM kernel applies.
Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor* b) {
  require(x.rank() >= 1 && w.rank() == 2, ErrorCode::Dimension, "linear: bad ranks");
  const size_t d_in = x.shape().back();
  const size_t d_out = w.dim(0);
  require(w.dim(1) == d_in, ErrorCode::Dimension,
          "linear: weight " + shape_string(w.shape()) + " does not accept input " +
              shape_string(x.shape()));
  if (b) require(b->rank() == 1 && b->dim(0) == d_out, ErrorCode::Dimension, "linear: bias shape");

  std::vector<size_t> out_shape = x.shape();
  out_shape.back() = d_out;
  Tensor y(out_shape);
  const size_t n = d_in == 0 ? 0 : x.size() / d_in;
  if (n == 0) return y;

  const size_t cols = round_up(n, kTile);
  std::vector<float> xt(d_in * cols, 0.0f);
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d_in; ++i) xt[i * cols + r] = x[r * d_in + i];
  std::vector<const float*> rows(d_in);
  for (size_t i = 0; i < d_in; ++i) rows[i] = xt.data() + i * cols;
  std::vector<float> yt(d_out * cols);
  gemm_rows(d_out, d_in, cols, w.data(), rows.data(), b ? b->data() : nullptr, yt.data());
  for (size_t r = 0; r < n; ++r)
    for (size_t o = 0; o < d_out; ++o) y[r * d_out + o] = yt[o * cols + r];
  return y;
}

}  // namespace

Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, size_t dilation,
                     ConvCache& cache, size_t groups) {
  require(x.rank() == 2 && w.rank() == 3 && b.rank() == 1, ErrorCode::Dimension,
          "causal_conv1d: expected x [C_in x T], w [C_out x C_in/g x K], b [C_out]");
  require(dilation >= 1 && groups >= 1, ErrorCode::Parameter, "causal_conv1d: dilation and groups must be positive");
  const size_t c_in = x.dim(0), steps = x.dim(1);
  const size_t c_out = w.dim(0), cin_per_group = w.dim(1), taps = w.dim(2);
  require(taps >= 1 && cin_per_group * groups == c_in && c_out % groups == 0, ErrorCode::Dimension,
          "causal_conv1d: weight " + shape_string(w.shape()) + " incompatible with input " +
              shape_string(x.shape()));
  require(b.dim(0) == c_out, ErrorCode::Dimension, "causal_conv1d: bias length");
  const size_t context = (taps - 1) * dilation;
  require(cache.width() == context && (context == 0 || cache.channels() == c_in),
          ErrorCode::Dimension,
          "causal_conv1d: cache " + shape_string(cache.frames.shape()) + " but layer needs [" +
              std::to_string(c_in) + "x" + std::to_string(context) + "]");

  const size_t cols = round_up(steps, kTile);
  const size_t stride = context + cols;
  std::vector<float> z(c_in * stride, 0.0f);
  for (size_t c = 0; c < c_in; ++c) {
    float* zr = z.data() + c * stride;
    if (context) std::copy_n(cache.frames.row(c), context, zr);
    std::copy_n(x.row(c), steps, zr + context);
  }

  Tensor y({c_out, steps});
  if (groups == 1) {
    // Reduction index (ci, k) in lexicographic order.
    std::vector<const float*> rows(c_in * taps);
    for (size_t c = 0; c < c_in; ++c)
      for (size_t k = 0; k < taps; ++k) rows[c * taps + k] = z.data() + c * stride + k * dilation;
    std::vector<float> out(c_out * cols);
    gemm_rows(c_out, c_in * taps, cols, w.data(), rows.data(), b.data(), out.data());
    for (size_t co = 0; co < c_out; ++co) std::copy_n(out.data() + co * cols, steps, y.row(co));
  } else {
    const size_t cout_per_group = c_out / groups;
    for (size_t co = 0; co < c_out; ++co) {
      float* yr = y.row(co);
      std::fill_n(yr, steps, b[co]);
      const size_t g = co / cout_per_group;
      for (size_t j = 0; j < cin_per_group; ++j) {
        const float* zr = z.data() + (g * cin_per_group + j) * stride;
        const float* wr = w.data() + (co * cin_per_group + j) * taps;
        for (size_t k = 0; k < taps; ++k) {
          const float wv = wr[k];
          const float* src = zr + k * dilation;
          for (size_t t = 0; t < steps; ++t) yr[t] += wv * src[t];
        }
      }
    }
  }

  if (context) {
    Tensor next({c_in, context});
    for (size_t c = 0; c < c_in; ++c) std::copy_n(z.data() + c * stride + steps, context, next.row(c));
    cache.frames = std::move(next);
  }
  return y;
}

Tensor framing_conv(std::span<const float> x, const Tensor& w, const Tensor& b, size_t hop) {
  require(hop >= 1, ErrorCode::Parameter, "framing_conv: hop must be positive");
  const size_t window = 3 * hop;
  require(w.rank() == 3 && w.dim(1) == 1 && w.dim(2) == window, ErrorCode::Dimension,
          "framing_conv: weight must be [E x 1 x 3L], got " + shape_string(w.shape()));
  const size_t channels = w.dim(0);
  require(b.rank() == 1 && b.dim(0) == channels, ErrorCode::Dimension, "framing_conv: bias length");
  require(x.size() >= window && (x.size() - 2 * hop) % hop == 0, ErrorCode::Framing,
          "framing_conv: input length " + std::to_string(x.size()) + " is not n*" +
              std::to_string(hop) + " + " + std::to_string(2 * hop) + " for n >= 1");
  const size_t frames = (x.size() - 2 * hop) / hop;

  Tensor y({channels, frames});
  for (size_t e = 0; e < channels; ++e) {
    float* yr = y.row(e);
    std::fill_n(yr, frames, b[e]);
    const float* wr = w.data() + e * window;
    for (size_t j = 0; j < window; ++j) {
      const float wv = wr[j];
      const float* src = x.data() + j;
      for (size_t i = 0; i < frames; ++i) yr[i] += wv * src[i * hop];
    }
  }
  return y;
}

Tensor synth_transpose_conv(const Tensor& frames, const Tensor& w, size_t hop, Tensor& tail) {
  require(hop >= 1, ErrorCode::Parameter, "synth_transpose_conv: hop must be positive");
  const size_t window = 3 * hop;
  require(frames.rank() == 2, ErrorCode::Dimension, "synth_transpose_conv: frames must be [E x n]");
  const size_t channels = frames.dim(0), count = frames.dim(1);
  require(w.rank() == 3 && w.dim(0) == channels && w.dim(1) == 1 && w.dim(2) == window,
          ErrorCode::Dimension,
          "synth_transpose_conv: weight " + shape_string(w.shape()) + " incompatible with frames " +
              shape_string(frames.shape()));
  require(tail.rank() == 1 && tail.dim(0) == 2 * hop, ErrorCode::Dimension,
          "synth_transpose_conv: tail must hold exactly 2L samples");

  std::vector<float> acc(count * hop + 2 * hop, 0.0f);
  std::copy_n(tail.data(), 2 * hop, acc.begin());
  std::vector<float> response(window);
  for (size_t i = 0; i < count; ++i) {
    std::fill(response.begin(), response.end(), 0.0f);
    for (size_t e = 0; e < channels; ++e) {
      const float f = frames.at(e, i);
      const float* wr = w.data() + e * window;
      for (size_t j = 0; j < window; ++j) response[j] += f * wr[j];
    }
    float* dst = acc.data() + i * hop;
    for (size_t j = 0; j < window; ++j) dst[j] += response[j];
  }

  Tensor out({count * hop}, std::vector<float>(acc.begin(), acc.begin() + count * hop));
  tail = Tensor({2 * hop}, std::vector<float>(acc.begin() + count * hop, acc.end()));
  return out;
}

void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, float eps) {
  const size_t n = x.size();
  require(n >= 1 && gamma.size() == n && beta.size() == n && out.size() == n, ErrorCode::Dimension,
          "layer_norm: shape mismatch");
  float sum = 0.0f;
  for (size_t i = 0; i < n; ++i) sum += x[i];
  const float mean = sum / static_cast<float>(n);
  float sq = 0.0f;
  for (size_t i = 0; i < n; ++i) {
    const float d = x[i] - mean;
    sq += d * d;
  }
  const float inv = 1.0f / std::sqrt(sq / static_cast<float>(n) + eps);
  for (size_t i = 0; i < n; ++i) out[i] = gamma[i] * ((x[i] - mean) * inv) + beta[i];
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  Tensor y(x.shape());
  layer_norm(x.values(), gamma.values(), beta.values(), y.values(), eps);
  return y;
}

Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require(x.rank() == 2, ErrorCode::Dimension, "layer_norm_channels: expected [C x T]");
  const size_t channels = x.dim(0), steps = x.dim(1);
  require(channels >= 1 && gamma.size() == channels && beta.size() == channels,
          ErrorCode::Dimension, "layer_norm_channels: shape mismatch");
  // Column-wise reductions in channel order, vectorized across columns.
  // Matches layer_norm() applied to each column exactly.
  const float n = static_cast<float>(channels);
  std::vector<float> mean(steps, 0.0f), inv(steps, 0.0f);
  for (size_t c = 0; c < channels; ++c) {
    const float* xr = x.row(c);
    for (size_t t = 0; t < steps; ++t) mean[t] += xr[t];
  }
  for (size_t t = 0; t < steps; ++t) mean[t] /= n;
  for (size_t c = 0; c < channels; ++c) {
    const float* xr = x.row(c);
    for (size_t t = 0; t < steps; ++t) {
      const float d = xr[t] - mean[t];
      inv[t] += d * d;
    }
  }
  for (size_t t = 0; t < steps; ++t) inv[t] = 1.0f / std::sqrt(inv[t] / n + eps);

  Tensor y({channels, steps});
  for (size_t c = 0; c < channels; ++c) {
    const float* xr = x.row(c);
    float* yr = y.row(c);
    const float g = gamma[c], bt = beta[c];
    for (size_t t = 0; t < steps; ++t) yr[t] = g * ((xr[t] - mean[t]) * inv[t]) + bt;
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return affine_rows(x, w, &b); }

Tensor linear(const Tensor& x, const Tensor& w) { return affine_rows(x, w, nullptr); }

Tensor mha_causal(const Tensor& x, const AttentionWeights& weights, size_t heads, size_t window,
                  KvCache& cache) {
  require(x.rank() == 2, ErrorCode::Dimension, "mha_causal: expected x [n x D]");
  const size_t n = x.dim(0), dim = x.dim(1);
  require(heads >= 1 && dim % heads == 0, ErrorCode::Config,
          "mha_causal: model dim " + std::to_string(dim) + " not divisible by " +
              std::to_string(heads) + " heads");
  require(window >= 1, ErrorCode::Config, "mha_causal: attention window must be >= 1");
  require(weights.wq && weights.wk && weights.wv && weights.wo, ErrorCode::Parameter,
          "mha_causal: missing projection");
  const size_t past = cache.frames();
  require(cache.keys.rank() == 2 && cache.values.rank() == 2 && cache.keys.dim(1) == dim &&
              cache.values.same_shape(cache.keys) && past <= window,
          ErrorCode::Dimension, "mha_causal: cache inconsistent with model dim or window");

  const Tensor q = linear(x, *weights.wq);
  const Tensor k_new = linear(x, *weights.wk);
  const Tensor v_new = linear(x, *weights.wv);

  const size_t total = past + n;
  Tensor keys({total, dim}), values({total, dim});
  std::copy_n(cache.keys.data(), past * dim, keys.data());
  std::copy_n(k_new.data(), n * dim, keys.data() + past * dim);
  std::copy_n(cache.values.data(), past * dim, values.data());
  std::copy_n(v_new.data(), n * dim, values.data() + past * dim);

  const size_t head_dim = dim / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  Tensor mixed({n, dim});
  std::vector<float> scores(window + 1);
  for (size_t t = 0; t < n; ++t) {
    const size_t pos = past + t;
    const size_t lo = pos > window ? pos - window : 0;
    const size_t span = pos - lo + 1;
    for (size_t h = 0; h < heads; ++h) {
      const float* qv = q.row(t) + h * head_dim;
      float peak = -INFINITY;
      for (size_t j = 0; j < span; ++j) {
        const float* kv = keys.row(lo + j) + h * head_dim;
        float s = 0.0f;
        for (size_t d = 0; d < head_dim; ++d) s += qv[d] * kv[d];
        s *= scale;
        scores[j] = s;
        peak = std::max(peak, s);
      }
      float denom = 0.0f;
      for (size_t j = 0; j < span; ++j) {
        scores[j] = std::exp(scores[j] - peak);
        denom += scores[j];
      }
      float* out = mixed.row(t) + h * head_dim;
      for (size_t j = 0; j < span; ++j) {
        const float p = scores[j] / denom;
        const float* vv = values.row(lo + j) + h * head_dim;
        for (size_t d = 0; d < head_dim; ++d) out[d] += p * vv[d];
      }
    }
  }

  const size_t keep = std::min(window, total);
  Tensor next_keys({keep, dim}), next_values({keep, dim});
  std::copy_n(keys.data() + (total - keep) * dim, keep * dim, next_keys.data());
  std::copy_n(values.data() + (total - keep) * dim, keep * dim, next_values.data());
  cache.keys = std::move(next_keys);
  cache.values = std::move(next_values);

  return linear(mixed, *weights.wo);
}

namespace {

// exp() by range reduction to [-ln2/2, ln2/2] and a degree-6 polynomial.
// Branch-free so the activation loops vectorize.
inline float exp_poly(float x) {
  x = x < -87.0f ? -87.0f : x;
  x = x > 88.0f ? 88.0f : x;
  // Round to nearest by adding and removing 1.5 * 2^23.
  const float n = (x * 1.44269504088896341f + 12582912.0f) - 12582912.0f;
  float r = x - n * 0.693359375f;
  r = r - n * -2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  const float y = p * r * r + r + 1.0f;
  const int32_t bits = (static_cast<int32_t>(n) + 127) << 23;
  return y * std::bit_cast<float>(bits);
}

// Rational erf approximation, |error| <= 1.5e-7.
inline float erf_approx(float x) {
  const float ax = std::fabs(x);
  const float t = 1.0f / (1.0f + 0.3275911f * ax);
  float p = 1.061405429f;
  p = p * t - 1.453152027f;
  p = p * t + 1.421413741f;
  p = p * t - 0.284496736f;
  p = p * t + 0.254829592f;
  const float y = 1.0f - p * t * exp_poly(-ax * ax);
  return std::copysign(y, x);
}

inline float gelu_inline(float x) { return 0.5f * x * (1.0f + erf_approx(x * 0.70710678118654752f)); }

}  // namespace

float gelu(float x) { return gelu_inline(x); }

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void pointwise_inplace(Tensor& x, Activation kind, float prelu_slope) {
  switch (kind) {
    case Activation::Gelu:
    {
      float* d = x.data();
      const size_t n = x.size();
      for (size_t i = 0; i < n; ++i) d[i] = gelu_inline(d[i]);
    }
      return;
    case Activation::Prelu:
      for (float& v : x.values()) v = prelu(v, prelu_slope);
      return;
    case Activation::Sigmoid:
      for (float& v : x.values()) v = sigmoid(v);
      return;
    case Activation::Softmax: {
      if (x.empty()) return;
      const size_t width = x.shape().back();
      for (size_t start = 0; start < x.size(); start += width) {
        float* r = x.data() + start;
        float peak = *std::max_element(r, r + width);
        float denom = 0.0f;
        for (size_t i = 0; i < width; ++i) {
          r[i] = std::exp(r[i] - peak);
          denom += r[i];
        }
        for (size_t i = 0; i < width; ++i) r[i] /= denom;
      }
      return;
    }
  }
}

Tensor pointwise(const Tensor& x, Activation kind, float prelu_slope) {
  Tensor y = x;
  pointwise_inplace(y, kind, prelu_slope);
  return y;
}

}  // namespace llvc
