#include "tgc/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "tgc/errors.hpp"

namespace tgc {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

TernaryTensor::TernaryTensor(Shape shape, std::vector<std::int8_t> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("ternary tensor: shape " + shape_to_string(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " elements");
  }
  for (auto v : values_) {
    if (v < -1 || v > 1) throw InvalidArgument("ternary tensor: element out of {-1,0,+1}");
  }
}

TernaryTensor TernaryTensor::zeros(Shape shape) {
  auto n = shape_size(shape);
  return TernaryTensor(std::move(shape), std::vector<std::int8_t>(n, 0));
}

void TernaryTensor::set(std::size_t i, std::int8_t v) {
  if (v < -1 || v > 1) throw InvalidArgument("ternary tensor: element out of {-1,0,+1}");
  values_.at(i) = v;
}

std::size_t TernaryTensor::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](std::int8_t v) { return v != 0; }));
}

BinaryTensor::BinaryTensor(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(std::move(shape)), bits_(std::move(bits)) {
  if (shape_size(shape_) != bits_.size()) {
    throw ShapeError("binary tensor: shape " + shape_to_string(shape_) + " does not hold " +
                     std::to_string(bits_.size()) + " elements");
  }
  for (auto b : bits_) {
    if (b > 1) throw InvalidArgument("binary tensor: element out of {0,1}");
  }
}

BinaryTensor BinaryTensor::zeros(Shape shape) {
  auto n = shape_size(shape);
  return BinaryTensor(std::move(shape), std::vector<std::uint8_t>(n, 0));
}

void BinaryTensor::set(std::size_t i, std::uint8_t bit) {
  if (bit > 1) throw InvalidArgument("binary tensor: element out of {0,1}");
  bits_.at(i) = bit;
}

}  // namespace tgc
