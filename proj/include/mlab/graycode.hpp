#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlab::gray {

// A word over {0,1}, stored most-significant bit first. Index 0 is the
// leading coordinate; for the binary-reflected code the leading coordinates
// are the slowly varying ones.
class BitString {
 public:
  explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    if (bits_.empty()) throw std::domain_error("BitString: length must be positive");
    for (auto b : bits_) {
      if (b != 0 && b != 1) throw std::domain_error("BitString: entries must be 0 or 1");
    }
  }

  // MSB-first decoding of the low `width` bits of `word`.
  static BitString from_word(std::uint64_t word, int width) {
    if (width < 1 || width > 63) throw std::domain_error("BitString: width out of range");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i)
      bits[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>((word >> (width - 1 - i)) & 1u);
    return BitString(std::move(bits));
  }

  std::uint64_t to_word() const {
    if (bits_.size() > 63) throw std::domain_error("BitString::to_word: too wide");
    std::uint64_t w = 0;
    for (auto b : bits_) w = (w << 1) | b;
    return w;
  }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_.at(i); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const BitString& other) const { return bits_ == other.bits_; }

  std::string to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

inline std::size_t hamming(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: width mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]) ? 1 : 0;
  return d;
}

// Widths are capped so all index arithmetic stays inside a 64-bit word and
// exhaustive enumeration stays tractable.
constexpr int kMaxCodeWidth = 30;

inline void check_width(int width) {
  if (width < 1 || width > kMaxCodeWidth)
    throw std::domain_error("gray: code width must be in [1, 30]");
}

// Index into a width-k code. Indexing is circular: out-of-range raw values
// wrap modulo 2^k, matching the cyclic segment indexing of the curve.
class CodeIndex {
 public:
  CodeIndex(std::uint64_t value, int width) : value_(value), width_(width) {
    check_width(width);
    if (value_ >= (std::uint64_t{1} << width_))
      throw std::domain_error("CodeIndex: value out of range");
  }

  static CodeIndex wrapped(std::int64_t raw, int width) {
    check_width(width);
    const std::int64_t period = std::int64_t{1} << width;
    std::int64_t v = raw % period;
    if (v < 0) v += period;
    return CodeIndex(static_cast<std::uint64_t>(v), width);
  }

  CodeIndex neighbor(std::int64_t offset) const {
    return wrapped(static_cast<std::int64_t>(value_) + offset, width_);
  }

  std::uint64_t value() const { return value_; }
  int width() const { return width_; }

 private:
  std::uint64_t value_;
  int width_;
};

// Binary-reflected Gray code word for index i: the closed form i ^ (i >> 1).
// Successive outputs differ in exactly one coordinate, cyclically, and the
// map is a bijection onto {0,1}^k.
inline BitString gray(std::uint64_t i, int k) {
  check_width(k);
  if (i >= (std::uint64_t{1} << k)) throw std::domain_error("gray: index out of range");
  return BitString::from_word(i ^ (i >> 1), k);
}

inline BitString gray(const CodeIndex& i) { return gray(i.value(), i.width()); }

// Inverse of gray(): prefix-XOR fold.
inline std::uint64_t gray_inverse(const BitString& b) {
  check_width(static_cast<int>(b.size()));
  std::uint64_t v = b.to_word();
  for (int shift = 1; shift < static_cast<int>(b.size()); shift <<= 1) v ^= v >> shift;
  return v;
}

// Repeats each bit of `b` `repeat` consecutive times, then zero-pads to
// `ambient` coordinates.
inline BitString expand_codeword(const BitString& b, int repeat, std::size_t ambient) {
  if (repeat < 1) throw std::domain_error("expand_codeword: repeat count must be >= 1");
  const std::size_t expanded = b.size() * static_cast<std::size_t>(repeat);
  if (ambient < expanded)
    throw std::domain_error("expand_codeword: ambient dimension too small");
  std::vector<std::uint8_t> bits(ambient, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (int r = 0; r < repeat; ++r) bits[pos++] = b[i];
  return BitString(std::move(bits));
}

}  // namespace mlab::gray
