#include "config.hpp"

#include <json.hpp>

#include "tensor.hpp"

namespace llvc {
namespace {

using ordered_json = nlohmann::ordered_json;

void check(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::Config, "invalid config: " + msg);
}

}  // namespace

void ModelConfig::validate() const {
  check(sample_rate > 0, "sample_rate must be positive");
  check(hop >= 1, "L must be >= 1");
  check(dec_chunk_len >= 1, "dec_chunk_len must be >= 1");
  check(enc_dim >= 1, "enc_dim must be >= 1");
  check(enc_layers <= 24, "enc_layers must be <= 24");
  check(dcc_kernel >= 1, "dcc_kernel must be >= 1");
  check(dec_dim >= 1, "dec_dim must be >= 1");
  check(heads >= 1 && dec_dim % heads == 0,
        "dec_dim " + std::to_string(dec_dim) + " not divisible by heads " + std::to_string(heads));
  check(ffn_dim >= 1, "ffn_dim must be >= 1");
  check(attn_window >= 1, "attn_window must be >= 1");
  check(prenet_dilations.size() == prenet_layers,
        "prenet_dilations must list one dilation per prenet layer");
  if (prenet_layers > 0) {
    check(prenet_kernel >= 1, "prenet_kernel must be >= 1");
    check(prenet_layers == 1 || prenet_channels >= 1, "prenet_channels must be >= 1");
    for (uint32_t d : prenet_dilations) check(d >= 1, "prenet dilations must be >= 1");
  }
}

std::string ModelConfig::to_json() const {
  ordered_json j;
  j["sample_rate"] = sample_rate;
  j["L"] = hop;
  j["dec_chunk_len"] = dec_chunk_len;
  j["enc_dim"] = enc_dim;
  j["enc_layers"] = enc_layers;
  j["dcc_kernel"] = dcc_kernel;
  j["dec_dim"] = dec_dim;
  j["dec_layers"] = dec_layers;
  j["heads"] = heads;
  j["ffn_dim"] = ffn_dim;
  j["attn_window"] = attn_window;
  j["prenet_layers"] = prenet_layers;
  j["prenet_channels"] = prenet_channels;
  j["prenet_kernel"] = prenet_kernel;
  j["prenet_dilations"] = prenet_dilations;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("invalid config JSON: ") + e.what());
  }
  check(j.is_object(), "top level must be an object");

  ModelConfig c;
  auto field = [&](const char* key, uint32_t& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    check(v.is_number_unsigned() || (v.is_number_integer() && v.get<int64_t>() >= 0),
          std::string(key) + " must be a non-negative integer");
    check(v.get<uint64_t>() <= UINT32_MAX, std::string(key) + " out of range");
    dst = v.get<uint32_t>();
  };
  field("sample_rate", c.sample_rate);
  field("L", c.hop);
  field("dec_chunk_len", c.dec_chunk_len);
  field("enc_dim", c.enc_dim);
  field("enc_layers", c.enc_layers);
  field("dcc_kernel", c.dcc_kernel);
  field("dec_dim", c.dec_dim);
  field("dec_layers", c.dec_layers);
  field("heads", c.heads);
  field("ffn_dim", c.ffn_dim);
  field("attn_window", c.attn_window);
  field("prenet_layers", c.prenet_layers);
  field("prenet_channels", c.prenet_channels);
  field("prenet_kernel", c.prenet_kernel);
  if (j.contains("prenet_dilations")) {
    const auto& d = j.at("prenet_dilations");
    check(d.is_array(), "prenet_dilations must be an array");
    c.prenet_dilations.clear();
    for (const auto& v : d) {
      check(v.is_number_integer() && v.get<int64_t>() >= 1, "prenet dilations must be >= 1");
      c.prenet_dilations.push_back(v.get<uint32_t>());
    }
  } else if (j.contains("prenet_layers")) {
    // Default schedule 1, 2, 4, ... for a custom depth.
    c.prenet_dilations.clear();
    for (uint32_t i = 0; i < c.prenet_layers; ++i) c.prenet_dilations.push_back(1u << i);
  }

  static const char* known[] = {"sample_rate", "L", "dec_chunk_len", "enc_dim", "enc_layers",
                                "dcc_kernel", "dec_dim", "dec_layers", "heads", "ffn_dim",
                                "attn_window", "prenet_layers", "prenet_channels",
                                "prenet_kernel", "prenet_dilations"};
  for (const auto& item : j.items()) {
    bool found = false;
    for (const char* k : known) found = found || item.key() == k;
    check(found, "unknown key \"" + item.key() + "\"");
  }
  c.validate();
  return c;
}

double algorithmic_latency_s(uint32_t sample_rate, uint32_t hop, uint32_t dec_chunk_len,
                             uint32_t chunks_per_call) {
  if (sample_rate == 0 || hop == 0 || dec_chunk_len == 0 || chunks_per_call == 0)
    throw Error(ErrorCode::Parameter,
                "latency requires positive sample rate, L, dec_chunk_len and N");
  const double samples = double(chunks_per_call) * dec_chunk_len * hop + 2.0 * hop;
  return samples / sample_rate;
}

double algorithmic_latency_s(const ModelConfig& config, uint32_t chunks_per_call) {
  return algorithmic_latency_s(config.sample_rate, config.hop, config.dec_chunk_len,
                               chunks_per_call);
}

}  // namespace llvc
