#pragma once

// Numeric kernels shared by the offline and streaming paths.
//
// Every reduction sums in a fixed order (bias first, then input channel,
// then tap) so that a kernel applied to x1 || x2 with a carried cache is
// bit-identical to the same kernel applied to x in one call. Vectorization
// only ever runs across independent outputs.

#include <cstddef>
#include <span>

#include "tensor.hpp"

namespace llvc {

inline constexpr float kLayerNormEps = 1e-5f;

/// Left context of one causal convolution: [C_in x (K-1)*dilation].
struct ConvCache {
  Tensor frames;

  static ConvCache zeros(size_t channels, size_t width) {
    return ConvCache{Tensor({channels, width})};
  }
  size_t channels() const { return frames.rank() < 2 ? 0 : frames.dim(0); }
  size_t width() const { return frames.rank() < 2 ? 0 : frames.dim(1); }
};

/// Dilated causal convolution over x [C_in x T] with weights
/// [C_out x C_in/groups x K] and bias [C_out]. Reads its left context from
/// `cache` and replaces it with the last (K-1)*dilation columns of
/// cache || x.
Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, size_t dilation,
                     ConvCache& cache, size_t groups = 1);

/// Strided analysis convolution: n*L + 2L samples -> [E x n] frames, frame i
/// reading samples [i*L, i*L + 3L). This is the only source of lookahead.
Tensor framing_conv(std::span<const float> x, const Tensor& w, const Tensor& b, size_t hop);

/// Overlap-add transposed convolution, the adjoint of framing_conv.
/// frames [E x n], w [E x 1 x 3L], tail [2L]. Emits n*L samples and
/// leaves the trailing 2L partial sums in `tail`.
Tensor synth_transpose_conv(const Tensor& frames, const Tensor& w, size_t hop, Tensor& tail);

void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, float eps = kLayerNormEps);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = kLayerNormEps);

/// Layer norm over the channel axis of every column of x [C x T].
Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           float eps = kLayerNormEps);

/// Affine map over the last dimension: x [... x D_in], W [D_out x D_in].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// Same, without bias.
Tensor linear(const Tensor& x, const Tensor& w);

struct AttentionWeights {
  const Tensor* wq = nullptr;
  const Tensor* wk = nullptr;
  const Tensor* wv = nullptr;
  const Tensor* wo = nullptr;
};

/// Projected keys and values of the most recent frames, [frames x D] each.
struct KvCache {
  Tensor keys;
  Tensor values;

  static KvCache empty(size_t dim) { return KvCache{Tensor({0, dim}), Tensor({0, dim})}; }
  size_t frames() const { return keys.rank() == 2 ? keys.dim(0) : 0; }
};

/// Multi-head causal self-attention over x [n x D]. Query frame g attends
/// to frames max(0, g - window) ... g, drawn from the cache and from x.
/// The cache keeps the most recent min(window, total) frames.
Tensor mha_causal(const Tensor& x, const AttentionWeights& weights, size_t heads, size_t window,
                  KvCache& cache);

enum class Activation { Gelu, Prelu, Sigmoid, Softmax };

float gelu(float x);
float sigmoid(float x);
inline float prelu(float x, float slope) { return x >= 0.0f ? x : slope * x; }

/// Elementwise activation; Softmax normalizes over the last dimension.
Tensor pointwise(const Tensor& x, Activation kind, float prelu_slope = 0.25f);
void pointwise_inplace(Tensor& x, Activation kind, float prelu_slope = 0.25f);

}  // namespace llvc
