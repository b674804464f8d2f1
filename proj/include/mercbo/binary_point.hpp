#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace mercbo {

// Largest supported dimension: points are packed into a 64-bit mask for
// parity evaluation.
inline constexpr std::size_t kMaxDimension = 64;

// One structure x in {0,1}^n. Index 0 is x_1, the most significant bit of
// the integer encoding used for tie-breaking.
class BinaryPoint {
 public:
  BinaryPoint() = default;
  explicit BinaryPoint(std::size_t n);
  BinaryPoint(std::initializer_list<int> bits);

  static BinaryPoint from_bits(const std::vector<int>& bits);
  static BinaryPoint from_string(std::string_view bits);
  // Inverse of code(): bit 1 is the most significant.
  static BinaryPoint from_code(std::uint64_t code, std::size_t n);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  // Bit i of the mask holds x_{i+1}.
  std::uint64_t mask() const;
  std::uint64_t code() const;
  std::size_t count() const;
  std::string to_string() const;

  template <typename Scalar = double>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> as_vector() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[Eigen::Index(i)] = bits_[i] ? Scalar(1) : Scalar(0);
    return v;
  }

  friend bool operator==(const BinaryPoint&, const BinaryPoint&) = default;
  friend auto operator<=>(const BinaryPoint&, const BinaryPoint&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming(const BinaryPoint& a, const BinaryPoint& b);

}  // namespace mercbo

template <>
struct std::hash<mercbo::BinaryPoint> {
  std::size_t operator()(const mercbo::BinaryPoint& x) const noexcept {
    return std::hash<std::uint64_t>{}(x.mask() ^ (std::uint64_t(x.size()) << 58));
  }
};
