#include "weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace llvc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void pad_to(size_t alignment) { out_.resize((out_.size() + alignment - 1) / alignment * alignment, 0); }
  size_t size() const { return out_.size(); }
  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  void bytes(void* p, size_t n, const char* what) {
    if (n > in_.size() - pos_)
      throw Error(ErrorCode::Format, std::string("not a valid weight file: truncated ") + what);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32(const char* what) {
    uint32_t v;
    bytes(&v, 4, what);
    return v;
  }
  uint64_t u64(const char* what) {
    uint64_t v;
    bytes(&v, 8, what);
    return v;
  }
  std::string str(size_t n, const char* what) {
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }
  size_t pos() const { return pos_; }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

size_t align_up(size_t v) { return (v + kWeightAlignment - 1) / kWeightAlignment * kWeightAlignment; }

}  // namespace

std::vector<uint8_t> serialize_weights(const WeightStore& store, const ModelConfig& config,
                                       const std::string& metadata) {
  validate_weights(config, store);
  const std::string meta = metadata.empty() ? config.to_json() : metadata;
  if (!metadata.empty() && !(ModelConfig::from_json(metadata) == config))
    throw Error(ErrorCode::Inconsistent, "inconsistent model: metadata does not describe config");

  Writer w;
  w.bytes(kWeightMagic, 4);
  w.u32(kWeightVersion);
  w.u32(static_cast<uint32_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  w.u32(static_cast<uint32_t>(store.size()));

  uint64_t offset = 0;
  for (const auto& [name, t] : store) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<uint32_t>(t.rank()));
    for (size_t d : t.shape()) w.u32(static_cast<uint32_t>(d));
    w.u32(0);
    w.u64(offset);
    offset = align_up(offset + t.size() * sizeof(float));
  }
  for (const auto& [name, t] : store) {
    w.pad_to(kWeightAlignment);
    w.bytes(t.data(), t.size() * sizeof(float));
  }
  return w.take();
}

LoadedModel deserialize_weights(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  if (bytes.size() < 4) throw Error(ErrorCode::Format, "not a weight file: too short");
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kWeightMagic, 4) != 0)
    throw Error(ErrorCode::Format, "not a weight file: bad magic");
  const uint32_t version = r.u32("version");
  if (version > kWeightVersion)
    throw Error(ErrorCode::Version, "unsupported version " + std::to_string(version) +
                                        " (this build reads version " +
                                        std::to_string(kWeightVersion) + ")");
  if (version == 0) throw Error(ErrorCode::Format, "not a weight file: version 0");

  LoadedModel model;
  model.metadata = r.str(r.u32("metadata length"), "metadata");
  try {
    model.config = ModelConfig::from_json(model.metadata);
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, std::string("not a valid weight file: ") + e.what());
  }

  struct Record {
    std::string name;
    std::vector<size_t> shape;
    uint64_t offset;
  };
  std::vector<Record> records(r.u32("tensor count"));
  for (Record& rec : records) {
    rec.name = r.str(r.u32("tensor name length"), "tensor name");
    const uint32_t rank = r.u32("tensor rank");
    if (rank > 8) throw Error(ErrorCode::Format, "not a valid weight file: tensor " + rec.name + " has rank " + std::to_string(rank));
    for (uint32_t k = 0; k < rank; ++k) rec.shape.push_back(r.u32("tensor dims"));
    const uint32_t dtype = r.u32("tensor dtype");
    if (dtype != 0)
      throw Error(ErrorCode::Format, "not a valid weight file: tensor " + rec.name +
                                         " has unsupported dtype " + std::to_string(dtype));
    rec.offset = r.u64("tensor offset");
  }

  const size_t data_start = align_up(r.pos());
  const size_t data_len = bytes.size() > data_start ? bytes.size() - data_start : 0;
  uint64_t previous_end = 0;
  for (const Record& rec : records) {
    const uint64_t count = shape_product(rec.shape);
    const uint64_t len = count * sizeof(float);
    if (rec.offset < previous_end || rec.offset % kWeightAlignment != 0)
      throw Error(ErrorCode::Format, "not a valid weight file: tensor " + rec.name +
                                         " overlaps its predecessor or is misaligned");
    if (rec.offset > data_len || len > data_len - rec.offset)
      throw Error(ErrorCode::Bounds, "tensor " + rec.name + " extends past the end of the data section (needs bytes " +
                                         std::to_string(rec.offset) + ".." + std::to_string(rec.offset + len) +
                                         ", have " + std::to_string(data_len) + ")");
    previous_end = rec.offset + len;

    std::vector<float> values(count);
    if (len) std::memcpy(values.data(), bytes.data() + data_start + rec.offset, len);
    if (!model.weights.emplace(rec.name, Tensor(rec.shape, std::move(values))).second)
      throw Error(ErrorCode::Format, "not a valid weight file: duplicate tensor " + rec.name);
  }

  validate_weights(model.config, model.weights);
  return model;
}

void save_weights(const WeightStore& store, const ModelConfig& config,
                  const std::filesystem::path& path, const std::string& metadata) {
  const std::vector<uint8_t> bytes = serialize_weights(store, config, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LoadedModel load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

uint64_t fnv1a64(std::string_view text) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

WeightStore random_init(const ModelConfig& config, uint64_t seed) {
  WeightStore store;
  for (const auto& [name, spec] : weight_specs(config)) {
    SplitMix64 rng(seed ^ fnv1a64(name));
    const double bound = std::sqrt(1.0 / double(spec.fan_in));
    Tensor t(spec.shape);
    for (float& v : t.values()) v = static_cast<float>((2.0 * rng.unit() - 1.0) * bound);
    store.emplace(name, std::move(t));
  }
  return store;
}

size_t parameter_count(const WeightStore& store) {
  size_t n = 0;
  for (const auto& [name, t] : store) n += t.size();
  return n;
}

}  // namespace llvc
