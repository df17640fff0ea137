#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "kernels.hpp"
#include "tensor.hpp"

namespace llvc {

using WeightStore = std::map<std::string, Tensor>;

struct TensorSpec {
  std::vector<size_t> shape;
  size_t fan_in = 1;  // bound for random init is sqrt(1 / fan_in)
};

/// Every tensor the generator needs for `config`, keyed by name.
std::map<std::string, TensorSpec> weight_specs(const ModelConfig& config);

/// Throws Error(Inconsistent) on a missing, extra or misshapen tensor.
void validate_weights(const ModelConfig& config, const WeightStore& store);

struct PrenetCaches {
  std::vector<ConvCache> layers;
};

struct EncoderCaches {
  std::vector<ConvCache> layers;  // depthwise DCC contexts
};

struct DecoderCaches {
  std::vector<KvCache> layers;
};

/// The voice-conversion generator: causal prenet, framing conv, DCC
/// encoder, windowed causal transformer decoder producing a latent mask,
/// and overlap-add synthesis. Weights are immutable after construction;
/// all per-stream state lives in the caches passed to each stage.
class Generator {
 public:
  Generator(ModelConfig config, WeightStore weights);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  const ModelConfig& config() const { return config_; }
  const WeightStore& weights() const { return weights_; }

  PrenetCaches initial_prenet_caches() const;
  EncoderCaches initial_encoder_caches() const;
  DecoderCaches initial_decoder_caches() const;
  Tensor initial_tail() const { return Tensor({config_.lookahead_samples()}); }

  /// Causal prenet with residual: output length equals input length.
  Tensor prenet_forward(std::span<const float> wave, PrenetCaches& caches) const;
  /// Same, but the convolution stack reads `conv_input` while the residual
  /// adds `wave`. Both spans must have equal length.
  Tensor prenet_forward(std::span<const float> wave, std::span<const float> conv_input,
                        PrenetCaches& caches) const;

  /// n*L + 2L samples -> latent [E x n].
  Tensor encoder_forward(std::span<const float> samples, EncoderCaches& caches) const;

  /// latent [E x n] -> mask [E x n] with entries in (0, 1).
  Tensor decoder_forward(const Tensor& latent, DecoderCaches& caches) const;

  /// Overlap-add synthesis of latent * mask; emits n*L samples.
  Tensor synthesize(const Tensor& latent, const Tensor& mask, Tensor& tail) const;

  /// Whole-signal reference path. Pads to whole chunks plus lookahead and
  /// returns exactly wave.size() samples, clamped to [-1, 1].
  std::vector<float> forward_offline(std::span<const float> wave) const;

 private:
  struct PrenetLayer {
    const Tensor* weight;
    const Tensor* bias;
    const Tensor* slope;  // null on the last layer
    size_t dilation;
  };
  struct DccLayer {
    const Tensor* norm_gamma;
    const Tensor* norm_beta;
    const Tensor* dw_weight;
    const Tensor* dw_bias;
    const Tensor* pw_weight;
    const Tensor* pw_bias;
    size_t dilation;
  };
  struct DecoderLayer {
    const Tensor* norm1_gamma;
    const Tensor* norm1_beta;
    AttentionWeights attn;
    const Tensor* norm2_gamma;
    const Tensor* norm2_beta;
    const Tensor* ffn1_weight;
    const Tensor* ffn1_bias;
    const Tensor* ffn2_weight;
    const Tensor* ffn2_bias;
  };

  const Tensor* tensor(const std::string& name) const;

  ModelConfig config_;
  WeightStore weights_;
  std::vector<PrenetLayer> prenet_;
  const Tensor* in_conv_weight_ = nullptr;
  const Tensor* in_conv_bias_ = nullptr;
  std::vector<DccLayer> dcc_;
  const Tensor* proj_weight_ = nullptr;
  const Tensor* proj_bias_ = nullptr;
  std::vector<DecoderLayer> decoder_;
  const Tensor* mask_weight_ = nullptr;
  const Tensor* mask_bias_ = nullptr;
  const Tensor* synth_weight_ = nullptr;
};

/// Clamp to [-1, 1]; returns how many samples were out of range.
size_t clamp_unit(std::span<float> samples);

}  // namespace llvc
