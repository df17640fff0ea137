#include "generator.hpp"

#include <algorithm>
#include <cmath>

namespace llvc {
namespace {

std::string prefixed(const std::string& stem, size_t index, const char* leaf) {
  return stem + std::to_string(index) + "." + leaf;
}

void layer_norm_rows(Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const size_t width = x.dim(1);
  std::vector<float> row(width);
  for (size_t r = 0; r < x.dim(0); ++r) {
    std::copy_n(x.row(r), width, row.begin());
    layer_norm(row, gamma.values(), beta.values(), std::span<float>(x.row(r), width));
  }
}

void add_inplace(Tensor& dst, const Tensor& src) {
  float* d = dst.data();
  const float* s = src.data();
  for (size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void require_state(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::State, msg);
}

}  // namespace

std::map<std::string, TensorSpec> weight_specs(const ModelConfig& c) {
  c.validate();
  std::map<std::string, TensorSpec> specs;
  const size_t frame_window = 3 * size_t{c.hop};

  for (size_t i = 0; i < c.prenet_layers; ++i) {
    const bool last = i + 1 == c.prenet_layers;
    const size_t in = i == 0 ? 1 : c.prenet_channels;
    const size_t out = last ? 1 : c.prenet_channels;
    const size_t fan_in = in * c.prenet_kernel;
    specs[prefixed("prenet.conv", i, "weight")] = {{out, in, c.prenet_kernel}, fan_in};
    specs[prefixed("prenet.conv", i, "bias")] = {{out}, fan_in};
    if (!last) specs[prefixed("prenet.prelu", i, "weight")] = {{1}, 1};
  }

  specs["encoder.in_conv.weight"] = {{c.enc_dim, 1, frame_window}, frame_window};
  specs["encoder.in_conv.bias"] = {{c.enc_dim}, frame_window};
  for (size_t i = 0; i < c.enc_layers; ++i) {
    specs[prefixed("encoder.dcc", i, "norm.weight")] = {{c.enc_dim}, 1};
    specs[prefixed("encoder.dcc", i, "norm.bias")] = {{c.enc_dim}, 1};
    specs[prefixed("encoder.dcc", i, "dw.weight")] = {{c.enc_dim, 1, c.dcc_kernel}, c.dcc_kernel};
    specs[prefixed("encoder.dcc", i, "dw.bias")] = {{c.enc_dim}, c.dcc_kernel};
    specs[prefixed("encoder.dcc", i, "pw.weight")] = {{c.enc_dim, c.enc_dim, 1}, c.enc_dim};
    specs[prefixed("encoder.dcc", i, "pw.bias")] = {{c.enc_dim}, c.enc_dim};
  }

  specs["decoder.proj_in.weight"] = {{c.dec_dim, c.enc_dim}, c.enc_dim};
  specs["decoder.proj_in.bias"] = {{c.dec_dim}, c.enc_dim};
  for (size_t j = 0; j < c.dec_layers; ++j) {
    specs[prefixed("decoder.layer", j, "norm1.weight")] = {{c.dec_dim}, 1};
    specs[prefixed("decoder.layer", j, "norm1.bias")] = {{c.dec_dim}, 1};
    for (const char* p : {"attn.q.weight", "attn.k.weight", "attn.v.weight", "attn.o.weight"})
      specs[prefixed("decoder.layer", j, p)] = {{c.dec_dim, c.dec_dim}, c.dec_dim};
    specs[prefixed("decoder.layer", j, "norm2.weight")] = {{c.dec_dim}, 1};
    specs[prefixed("decoder.layer", j, "norm2.bias")] = {{c.dec_dim}, 1};
    specs[prefixed("decoder.layer", j, "ffn1.weight")] = {{c.ffn_dim, c.dec_dim}, c.dec_dim};
    specs[prefixed("decoder.layer", j, "ffn1.bias")] = {{c.ffn_dim}, c.dec_dim};
    specs[prefixed("decoder.layer", j, "ffn2.weight")] = {{c.dec_dim, c.ffn_dim}, c.ffn_dim};
    specs[prefixed("decoder.layer", j, "ffn2.bias")] = {{c.dec_dim}, c.ffn_dim};
  }
  specs["decoder.mask.weight"] = {{c.enc_dim, c.dec_dim}, c.dec_dim};
  specs["decoder.mask.bias"] = {{c.enc_dim}, c.dec_dim};

  specs["synth.weight"] = {{c.enc_dim, 1, frame_window}, c.enc_dim};
  return specs;
}

void validate_weights(const ModelConfig& config, const WeightStore& store) {
  const auto specs = weight_specs(config);
  for (const auto& [name, spec] : specs) {
    auto it = store.find(name);
    if (it == store.end()) throw Error(ErrorCode::Inconsistent, "inconsistent model: missing tensor " + name);
    if (it->second.shape() != spec.shape)
      throw Error(ErrorCode::Inconsistent, "inconsistent model: tensor " + name + " has shape " +
                                               shape_string(it->second.shape()) + ", config expects " +
                                               shape_string(spec.shape));
  }
  for (const auto& [name, t] : store)
    if (!specs.count(name))
      throw Error(ErrorCode::Inconsistent, "inconsistent model: unexpected tensor " + name);
}

size_t clamp_unit(std::span<float> samples) {
  size_t clamped = 0;
  for (float& v : samples) {
    if (v > 1.0f) {
      v = 1.0f;
      ++clamped;
    } else if (v < -1.0f) {
      v = -1.0f;
      ++clamped;
    }
  }
  return clamped;
}

Generator::Generator(ModelConfig config, WeightStore weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  validate_weights(config_, weights_);
  const ModelConfig& c = config_;

  for (size_t i = 0; i < c.prenet_layers; ++i) {
    const bool last = i + 1 == c.prenet_layers;
    prenet_.push_back({tensor(prefixed("prenet.conv", i, "weight")),
                       tensor(prefixed("prenet.conv", i, "bias")),
                       last ? nullptr : tensor(prefixed("prenet.prelu", i, "weight")),
                       c.prenet_dilations[i]});
  }
  in_conv_weight_ = tensor("encoder.in_conv.weight");
  in_conv_bias_ = tensor("encoder.in_conv.bias");
  for (size_t i = 0; i < c.enc_layers; ++i) {
    dcc_.push_back({tensor(prefixed("encoder.dcc", i, "norm.weight")),
                    tensor(prefixed("encoder.dcc", i, "norm.bias")),
                    tensor(prefixed("encoder.dcc", i, "dw.weight")),
                    tensor(prefixed("encoder.dcc", i, "dw.bias")),
                    tensor(prefixed("encoder.dcc", i, "pw.weight")),
                    tensor(prefixed("encoder.dcc", i, "pw.bias")), c.dcc_dilation(i)});
  }
  proj_weight_ = tensor("decoder.proj_in.weight");
  proj_bias_ = tensor("decoder.proj_in.bias");
  for (size_t j = 0; j < c.dec_layers; ++j) {
    decoder_.push_back({tensor(prefixed("decoder.layer", j, "norm1.weight")),
                        tensor(prefixed("decoder.layer", j, "norm1.bias")),
                        {tensor(prefixed("decoder.layer", j, "attn.q.weight")),
                         tensor(prefixed("decoder.layer", j, "attn.k.weight")),
                         tensor(prefixed("decoder.layer", j, "attn.v.weight")),
                         tensor(prefixed("decoder.layer", j, "attn.o.weight"))},
                        tensor(prefixed("decoder.layer", j, "norm2.weight")),
                        tensor(prefixed("decoder.layer", j, "norm2.bias")),
                        tensor(prefixed("decoder.layer", j, "ffn1.weight")),
                        tensor(prefixed("decoder.layer", j, "ffn1.bias")),
                        tensor(prefixed("decoder.layer", j, "ffn2.weight")),
                        tensor(prefixed("decoder.layer", j, "ffn2.bias"))});
  }
  mask_weight_ = tensor("decoder.mask.weight");
  mask_bias_ = tensor("decoder.mask.bias");
  synth_weight_ = tensor("synth.weight");
}

const Tensor* Generator::tensor(const std::string& name) const { return &weights_.at(name); }

PrenetCaches Generator::initial_prenet_caches() const {
  PrenetCaches caches;
  for (size_t i = 0; i < prenet_.size(); ++i) {
    const size_t in = prenet_[i].weight->dim(1);
    caches.layers.push_back(ConvCache::zeros(in, (config_.prenet_kernel - 1) * prenet_[i].dilation));
  }
  return caches;
}

EncoderCaches Generator::initial_encoder_caches() const {
  EncoderCaches caches;
  for (const auto& layer : dcc_)
    caches.layers.push_back(ConvCache::zeros(config_.enc_dim, (config_.dcc_kernel - 1) * layer.dilation));
  return caches;
}

DecoderCaches Generator::initial_decoder_caches() const {
  DecoderCaches caches;
  for (size_t j = 0; j < decoder_.size(); ++j) caches.layers.push_back(KvCache::empty(config_.dec_dim));
  return caches;
}

Tensor Generator::prenet_forward(std::span<const float> wave, PrenetCaches& caches) const {
  return prenet_forward(wave, wave, caches);
}

Tensor Generator::prenet_forward(std::span<const float> wave, std::span<const float> conv_input,
                                 PrenetCaches& caches) const {
  if (wave.size() != conv_input.size())
    throw Error(ErrorCode::Dimension, "prenet: residual and convolution inputs differ in length");
  require_state(caches.layers.size() == prenet_.size(), "prenet: cache has " +
                                                            std::to_string(caches.layers.size()) +
                                                            " layers, model has " +
                                                            std::to_string(prenet_.size()));
  for (size_t i = 0; i < prenet_.size(); ++i) {
    const size_t width = (config_.prenet_kernel - 1) * prenet_[i].dilation;
    require_state(caches.layers[i].width() == width &&
                      (width == 0 || caches.layers[i].channels() == prenet_[i].weight->dim(1)),
                  "prenet: cache " + std::to_string(i) + " has shape " +
                      shape_string(caches.layers[i].frames.shape()));
  }

  const size_t steps = wave.size();
  Tensor out({steps}, std::vector<float>(wave.begin(), wave.end()));
  if (prenet_.empty() || steps == 0) return out;

  Tensor h({1, steps}, std::vector<float>(conv_input.begin(), conv_input.end()));
  for (size_t i = 0; i < prenet_.size(); ++i) {
    const PrenetLayer& layer = prenet_[i];
    h = causal_conv1d(h, *layer.weight, *layer.bias, layer.dilation, caches.layers[i]);
    if (layer.slope) pointwise_inplace(h, Activation::Prelu, (*layer.slope)[0]);
  }
  for (size_t t = 0; t < steps; ++t) out[t] += h[t];
  return out;
}

Tensor Generator::encoder_forward(std::span<const float> samples, EncoderCaches& caches) const {
  require_state(caches.layers.size() == dcc_.size(), "encoder: cache layer count mismatch");
  for (size_t i = 0; i < dcc_.size(); ++i) {
    const size_t width = (config_.dcc_kernel - 1) * dcc_[i].dilation;
    require_state(caches.layers[i].width() == width &&
                      (width == 0 || caches.layers[i].channels() == config_.enc_dim),
                  "encoder: cache " + std::to_string(i) + " has shape " +
                      shape_string(caches.layers[i].frames.shape()));
  }

  Tensor h = framing_conv(samples, *in_conv_weight_, *in_conv_bias_, config_.hop);
  for (size_t i = 0; i < dcc_.size(); ++i) {
    const DccLayer& layer = dcc_[i];
    Tensor normed = layer_norm_channels(h, *layer.norm_gamma, *layer.norm_beta);
    Tensor spread = causal_conv1d(normed, *layer.dw_weight, *layer.dw_bias, layer.dilation,
                                  caches.layers[i], config_.enc_dim);
    ConvCache none;
    Tensor mixed = causal_conv1d(spread, *layer.pw_weight, *layer.pw_bias, 1, none);
    pointwise_inplace(mixed, Activation::Gelu);
    add_inplace(h, mixed);
  }
  return h;
}

Tensor Generator::decoder_forward(const Tensor& latent, DecoderCaches& caches) const {
  if (latent.rank() != 2 || latent.dim(0) != config_.enc_dim)
    throw Error(ErrorCode::Dimension, "decoder: latent must be [" + std::to_string(config_.enc_dim) +
                                          " x n], got " + shape_string(latent.shape()));
  require_state(caches.layers.size() == decoder_.size(), "decoder: cache layer count mismatch");
  for (const KvCache& kv : caches.layers)
    require_state(kv.keys.rank() == 2 && kv.keys.dim(1) == config_.dec_dim &&
                      kv.values.same_shape(kv.keys) && kv.frames() <= config_.attn_window,
                  "decoder: key/value cache has shape " + shape_string(kv.keys.shape()));

  Tensor h = linear(transpose(latent), *proj_weight_, *proj_bias_);
  for (size_t j = 0; j < decoder_.size(); ++j) {
    const DecoderLayer& layer = decoder_[j];
    Tensor normed = h;
    layer_norm_rows(normed, *layer.norm1_gamma, *layer.norm1_beta);
    add_inplace(h, mha_causal(normed, layer.attn, config_.heads, config_.attn_window, caches.layers[j]));

    normed = h;
    layer_norm_rows(normed, *layer.norm2_gamma, *layer.norm2_beta);
    Tensor inner = linear(normed, *layer.ffn1_weight, *layer.ffn1_bias);
    pointwise_inplace(inner, Activation::Gelu);
    add_inplace(h, linear(inner, *layer.ffn2_weight, *layer.ffn2_bias));
  }
  Tensor mask = linear(h, *mask_weight_, *mask_bias_);
  pointwise_inplace(mask, Activation::Sigmoid);
  return transpose(mask);
}

Tensor Generator::synthesize(const Tensor& latent, const Tensor& mask, Tensor& tail) const {
  if (!latent.same_shape(mask))
    throw Error(ErrorCode::Dimension, "synthesize: latent " + shape_string(latent.shape()) +
                                          " and mask " + shape_string(mask.shape()) + " differ");
  Tensor gated = latent;
  for (size_t i = 0; i < gated.size(); ++i) gated[i] *= mask[i];
  return synth_transpose_conv(gated, *synth_weight_, config_.hop, tail);
}

std::vector<float> Generator::forward_offline(std::span<const float> wave) const {
  const size_t count = wave.size();
  if (count == 0) return {};
  for (float v : wave)
    if (!std::isfinite(v)) throw Error(ErrorCode::Parameter, "input contains non-finite samples");

  const size_t chunk = config_.chunk_samples();
  const size_t chunks = (count + chunk - 1) / chunk;
  std::vector<float> padded(chunks * chunk + config_.lookahead_samples(), 0.0f);
  std::copy(wave.begin(), wave.end(), padded.begin());
  clamp_unit(std::span<float>(padded.data(), count));

  PrenetCaches prenet_caches = initial_prenet_caches();
  EncoderCaches encoder_caches = initial_encoder_caches();
  DecoderCaches decoder_caches = initial_decoder_caches();
  Tensor tail = initial_tail();

  const Tensor pre = prenet_forward(padded, prenet_caches);
  const Tensor latent = encoder_forward(pre.values(), encoder_caches);
  const Tensor mask = decoder_forward(latent, decoder_caches);
  const Tensor samples = synthesize(latent, mask, tail);

  std::vector<float> out(samples.data(), samples.data() + count);
  clamp_unit(out);
  return out;
}

}  // namespace llvc
