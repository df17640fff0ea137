#include <doctest.h>

#include <array>

#include "config.hpp"
#include "tensor.hpp"

using namespace llvc;

TEST_CASE("default geometry") {
  ModelConfig c;
  CHECK(c.chunk_samples() == 224);
  CHECK(c.lookahead_samples() == 16);
  CHECK(c.window_samples() == 240);
  CHECK(c.dcc_dilation(0) == 1);
  CHECK(c.dcc_dilation(7) == 128);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("algorithmic latency") {
  ModelConfig c;
  CHECK(algorithmic_latency_s(c) == 0.015);
  CHECK(algorithmic_latency_s(c, 2) == 0.029);
  CHECK(algorithmic_latency_s(16000, 8, 1, 1) == 0.0015);
  CHECK(algorithmic_latency_s(16000, 8, 28, 4) == (4.0 * 224 + 16) / 16000);
  for (auto args : {std::array<uint32_t, 4>{0, 8, 28, 1}, {16000, 0, 28, 1}, {16000, 8, 0, 1}, {16000, 8, 28, 0}}) {
    try {
      algorithmic_latency_s(args[0], args[1], args[2], args[3]);
      FAIL("expected parameter error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parameter);
    }
  }
}

TEST_CASE("config JSON round trip") {
  ModelConfig c;
  c.hop = 4;
  c.enc_layers = 3;
  c.prenet_dilations = {1, 3, 9};
  const std::string text = c.to_json();
  CHECK(ModelConfig::from_json(text) == c);
  CHECK(ModelConfig::from_json(text).to_json() == text);
  CHECK(ModelConfig::from_json("{}") == ModelConfig{});
  CHECK(ModelConfig::from_json(R"({"L": 8, "dec_chunk_len": 28})") == ModelConfig{});
}

TEST_CASE("invalid configs are config errors") {
  for (const char* text : {R"({"L": 0})", R"({"dec_chunk_len": 0})", R"({"sample_rate": 0})",
                           R"({"dec_dim": 250, "heads": 8})", R"({"bogus": 1})", "not json",
                           R"({"prenet_layers": 2, "prenet_dilations": [1,2,4]})", R"({"L": -3})"}) {
    CAPTURE(text);
    try {
      ModelConfig::from_json(text);
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Config);
    }
  }
}
