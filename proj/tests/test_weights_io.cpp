#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string_view>

#include "generator.hpp"
#include "weights_io.hpp"

using namespace llvc;

namespace {

const ModelConfig& small() {
  static const ModelConfig cfg = ModelConfig::from_json(
      R"({"L": 4, "dec_chunk_len": 6, "enc_dim": 16, "enc_layers": 3, "dec_dim": 8, "heads": 2,
          "ffn_dim": 16, "attn_window": 5, "prenet_channels": 4})");
  return cfg;
}

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an llvc::Error");
  return Error(ErrorCode::Parameter, "");
}

uint32_t read_u32(const std::vector<uint8_t>& b, size_t at) {
  return uint32_t(b[at]) | uint32_t(b[at + 1]) << 8 | uint32_t(b[at + 2]) << 16 | uint32_t(b[at + 3]) << 24;
}

size_t find_name(const std::vector<uint8_t>& b, std::string_view name) {
  auto it = std::search(b.begin(), b.end(), name.begin(), name.end());
  REQUIRE(it != b.end());
  return size_t(it - b.begin());
}

}  // namespace

TEST_CASE("splitmix64 and fnv1a64 reference values") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFull);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ull);
  CHECK(rng.next() == 0x06C45D188009454Full);
  CHECK(fnv1a64("") == 0xCBF29CE484222325ull);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8Cull);
  SplitMix64 u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.unit();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("random_init") {
  const WeightStore a = random_init(small(), 42), b = random_init(small(), 42), c = random_init(small(), 43);
  CHECK(a == b);
  CHECK(a != c);
  CHECK_NOTHROW(validate_weights(small(), a));
  const auto specs = weight_specs(small());
  CHECK(a.size() == specs.size());
  for (const auto& [name, t] : a) {
    const float bound = float(std::sqrt(1.0 / double(specs.at(name).fan_in)));
    for (float v : t.values()) {
      CHECK(std::isfinite(v));
      CHECK(std::abs(v) <= bound);
    }
  }
  CHECK(parameter_count(random_init(ModelConfig{}, 1)) == 3210243);
}

TEST_CASE("file layout") {
  const WeightStore w = random_init(small(), 1);
  const std::vector<uint8_t> bytes = serialize_weights(w, small());
  CHECK(std::memcmp(bytes.data(), "LLVC", 4) == 0);
  CHECK(read_u32(bytes, 4) == 1);
  const uint32_t meta_len = read_u32(bytes, 8);
  const std::string meta(bytes.begin() + 12, bytes.begin() + 12 + meta_len);
  CHECK(ModelConfig::from_json(meta) == small());
  CHECK(read_u32(bytes, 12 + meta_len) == w.size());
  CHECK(bytes == serialize_weights(w, small()));
}

TEST_CASE("round trips are bit exact") {
  const WeightStore w = random_init(small(), 2);
  const auto path = std::filesystem::temp_directory_path() / "llvc-test-weights.llvc";
  save_weights(w, small(), path);
  LoadedModel m = load_weights(path);
  CHECK(m.weights == w);
  CHECK(m.config == small());
  CHECK(m.metadata == small().to_json());

  const std::vector<uint8_t> first = serialize_weights(m.weights, m.config, m.metadata);
  std::ifstream in(path, std::ios::binary);
  const std::vector<uint8_t> on_disk((std::istreambuf_iterator<char>(in)), {});
  CHECK(first == on_disk);

  // Non-canonical metadata survives unchanged.
  const std::string spaced = "{ \"L\": 4, \"dec_chunk_len\": 6, \"enc_dim\": 16, \"enc_layers\": 3, \"dec_dim\": 8,"
                             " \"heads\": 2, \"ffn_dim\": 16, \"attn_window\": 5, \"prenet_channels\": 4 }";
  const std::vector<uint8_t> custom = serialize_weights(w, small(), spaced);
  LoadedModel again = deserialize_weights(custom);
  CHECK(again.metadata == spaced);
  CHECK(serialize_weights(again.weights, again.config, again.metadata) == custom);
  std::filesystem::remove(path);
}

TEST_CASE("missing tensor is rejected before writing") {
  WeightStore w = random_init(small(), 3);
  w.erase("decoder.mask.bias");
  const auto path = std::filesystem::temp_directory_path() / "llvc-test-missing.llvc";
  std::filesystem::remove(path);
  CHECK(error_of([&] { save_weights(w, small(), path); }).code() == ErrorCode::Inconsistent);
  CHECK_FALSE(std::filesystem::exists(path));
}

TEST_CASE("corrupt files produce distinct errors") {
  const std::vector<uint8_t> good = serialize_weights(random_init(small(), 4), small());

  std::vector<uint8_t> magic = good;
  std::memcpy(magic.data(), "XXXX", 4);
  Error e = error_of([&] { deserialize_weights(magic); });
  CHECK(e.code() == ErrorCode::Format);
  CHECK(std::string(e.what()).find("not a weight file") != std::string::npos);

  std::vector<uint8_t> version = good;
  version[4] = 2;
  e = error_of([&] { deserialize_weights(version); });
  CHECK(e.code() == ErrorCode::Version);
  CHECK(std::string(e.what()).find("unsupported version") != std::string::npos);

  // Tensors are laid out in name order; the last one is cut short.
  std::vector<uint8_t> truncated(good.begin(), good.end() - 12);
  e = error_of([&] { deserialize_weights(truncated); });
  CHECK(e.code() == ErrorCode::Bounds);
  CHECK(std::string(e.what()).find("synth.weight") != std::string::npos);

  std::vector<uint8_t> shape = good;
  const size_t at = find_name(shape, "synth.weight") + std::strlen("synth.weight");
  CHECK(read_u32(shape, at) == 3);
  CHECK(read_u32(shape, at + 4) == 16);
  shape[at + 4] = 15;
  e = error_of([&] { deserialize_weights(shape); });
  CHECK(e.code() == ErrorCode::Inconsistent);

  std::vector<uint8_t> header_cut(good.begin(), good.begin() + 20);
  CHECK(error_of([&] { deserialize_weights(header_cut); }).code() == ErrorCode::Format);
  CHECK(error_of([] { load_weights("/nonexistent/llvc.bin"); }).code() == ErrorCode::Io);
}
