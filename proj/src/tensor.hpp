#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace llvc {

enum class ErrorCode {
  Parameter,
  Dimension,
  Config,
  State,
  Framing,
  Format,
  Version,
  Inconsistent,
  Bounds,
  Io,
  Audio,
  Rate,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dense row-major float32 tensor. Sequence tensors are laid out
/// [channels x frames] unless a kernel says otherwise.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, float fill = 0.0f);
  Tensor(std::vector<size_t> shape, std::vector<float> data);

  static Tensor zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor vector(std::vector<float> values);
  static Tensor matrix(size_t rows, size_t cols, std::vector<float> values);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t dim(size_t axis) const;
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  // 2-D access.
  float& at(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
  float at(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

  float* row(size_t r) { return data_.data() + r * shape_[1]; }
  const float* row(size_t r) const { return data_.data() + r * shape_[1]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::vector<size_t> shape_;
  std::vector<float> data_;
};

size_t shape_product(const std::vector<size_t>& shape);
std::string shape_string(const std::vector<size_t>& shape);

// 2-D transpose.
Tensor transpose(const Tensor& x);

}  // namespace llvc
