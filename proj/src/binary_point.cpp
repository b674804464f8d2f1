#include "mercbo/binary_point.hpp"

#include "mercbo/errors.hpp"

#include <bit>

namespace mercbo {

namespace {

void check_dimension(std::size_t n) {
  if (n == 0 || n > kMaxDimension) {
    throw InvalidConfiguration("binary point dimension must be in [1, 64], got " + std::to_string(n));
  }
}

}  // namespace

BinaryPoint::BinaryPoint(std::size_t n) : bits_(n, 0) { check_dimension(n); }

BinaryPoint::BinaryPoint(std::initializer_list<int> bits)
    : BinaryPoint(from_bits(std::vector<int>(bits))) {}

BinaryPoint BinaryPoint::from_bits(const std::vector<int>& bits) {
  BinaryPoint x(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0 && bits[i] != 1) throw InvalidPoint("bit values must be 0 or 1");
    x.bits_[i] = std::uint8_t(bits[i]);
  }
  return x;
}

BinaryPoint BinaryPoint::from_string(std::string_view bits) {
  BinaryPoint x(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw InvalidPoint("invalid bit character '" + std::string(1, bits[i]) + "'");
    }
    x.bits_[i] = bits[i] == '1';
  }
  return x;
}

BinaryPoint BinaryPoint::from_code(std::uint64_t code, std::size_t n) {
  BinaryPoint x(n);
  for (std::size_t i = 0; i < n; ++i) x.bits_[i] = (code >> (n - 1 - i)) & 1U;
  return x;
}

std::uint64_t BinaryPoint::mask() const {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) m |= std::uint64_t(bits_[i]) << i;
  return m;
}

std::uint64_t BinaryPoint::code() const {
  std::uint64_t c = 0;
  for (auto b : bits_) c = (c << 1) | b;
  return c;
}

std::size_t BinaryPoint::count() const { return std::size_t(std::popcount(mask())); }

std::string BinaryPoint::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
  return s;
}

std::size_t hamming(const BinaryPoint& a, const BinaryPoint& b) {
  if (a.size() != b.size()) throw DimensionMismatch("hamming: dimension mismatch");
  return std::size_t(std::popcount(a.mask() ^ b.mask()));
}

}  // namespace mercbo
