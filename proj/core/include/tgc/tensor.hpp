#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tgc {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Weights restricted to {-1, 0, +1}.
class TernaryTensor {
 public:
  TernaryTensor() = default;
  TernaryTensor(Shape shape, std::vector<std::int8_t> values);

  static TernaryTensor zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<const std::int8_t> values() const { return values_; }
  std::int8_t operator[](std::size_t i) const { return values_[i]; }

  /// Only accepts -1, 0 or +1.
  void set(std::size_t i, std::int8_t v);

  std::size_t count_nonzero() const;
  std::size_t count_zero() const { return size() - count_nonzero(); }

  friend bool operator==(const TernaryTensor&, const TernaryTensor&) = default;

 private:
  Shape shape_;
  std::vector<std::int8_t> values_;
};

/// Bits in {0, 1}; bit b stands for the value 2b - 1.
class BinaryTensor {
 public:
  BinaryTensor() = default;
  BinaryTensor(Shape shape, std::vector<std::uint8_t> bits);

  static BinaryTensor zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, std::uint8_t bit);

  friend bool operator==(const BinaryTensor&, const BinaryTensor&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

/// Plain integer tensor, used for pre-activations and final scores.
struct IntTensor {
  Shape shape;
  std::vector<std::int32_t> values;
};

}  // namespace tgc
