#include "tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace llvc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parameter: return "parameter error";
    case ErrorCode::Dimension: return "dimension error";
    case ErrorCode::Config: return "config error";
    case ErrorCode::State: return "state error";
    case ErrorCode::Framing: return "framing error";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Version: return "version error";
    case ErrorCode::Inconsistent: return "inconsistent model";
    case ErrorCode::Bounds: return "bounds error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Audio: return "audio format error";
    case ErrorCode::Rate: return "sample rate mismatch";
  }
  return "unknown error";
}

size_t shape_product(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_))
    throw Error(ErrorCode::Dimension, "tensor data length " + std::to_string(data_.size()) +
                                          " does not match shape " + shape_string(shape_));
}

Tensor Tensor::vector(std::vector<float> values) {
  const size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(size_t rows, size_t cols, std::vector<float> values) {
  return Tensor({rows, cols}, std::move(values));
}

size_t Tensor::dim(size_t axis) const {
  if (axis >= shape_.size())
    throw Error(ErrorCode::Dimension, "axis " + std::to_string(axis) + " out of range for " +
                                          shape_string(shape_));
  return shape_[axis];
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ &&
         (a.data_.empty() ||
          std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0);
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw Error(ErrorCode::Dimension, "transpose expects a 2-D tensor");
  const size_t rows = x.dim(0), cols = x.dim(1);
  Tensor y({cols, rows});
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) y.at(c, r) = x.at(r, c);
  return y;
}

}  // namespace llvc
