#include <doctest.h>

#include <set>
#include <vector>

#include "mlab/graycode.hpp"
#include "mlab/rng.hpp"

using namespace mlab;
using gray::BitString;

namespace {

// Independent construction of the binary-reflected code by the recursive
// reflect-and-prefix definition; oracle for the closed form.
std::vector<std::string> reflected_code(int k) {
  std::vector<std::string> seq = {"0", "1"};
  for (int bit = 1; bit < k; ++bit) {
    std::vector<std::string> next;
    for (const auto& s : seq) next.push_back("0" + s);
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) next.push_back("1" + *it);
    seq = std::move(next);
  }
  return seq;
}

}  // namespace

TEST_CASE("gray code matches the listed k=3 sequence") {
  const std::vector<std::string> expected = {"000", "001", "011", "010",
                                             "110", "111", "101", "100"};
  for (std::uint64_t i = 0; i < 8; ++i) CHECK(gray::gray(i, 3).to_string() == expected[i]);
}

TEST_CASE("gray code base case and closed-form spot value") {
  CHECK(gray::gray(0, 1).to_string() == "0");
  CHECK(gray::gray(13, 4).to_string() == "1011");
}

TEST_CASE("closed form equals the recursive reflected construction") {
  for (int k = 1; k <= 10; ++k) {
    const auto oracle = reflected_code(k);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << k); ++i)
      CHECK(gray::gray(i, k).to_string() == oracle[i]);
  }
}

TEST_CASE("cyclic successive Hamming distance is one and the map is a bijection") {
  for (int k = 1; k <= 16; ++k) {
    const std::uint64_t n = std::uint64_t{1} << k;
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto cur = gray::gray(i, k);
      const auto next = gray::gray((i + 1) % n, k);
      CHECK(gray::hamming(cur, next) == 1);
      seen.insert(cur.to_word());
    }
    CHECK(seen.size() == n);
  }
}

TEST_CASE("gray_inverse round-trips") {
  CHECK(gray::gray_inverse(BitString::from_word(0, 3)) == 0);
  CHECK(gray::gray_inverse(BitString::from_word(0b100, 3)) == 7);
  CHECK(gray::gray_inverse(BitString::from_word(0b1011, 4)) == 13);
  for (int k = 1; k <= 16; ++k)
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << k); i += (k < 8 ? 1 : 97))
      CHECK(gray::gray_inverse(gray::gray(i, k)) == i);
}

TEST_CASE("expand_codeword repeats blocks and zero-pads") {
  const auto b01 = BitString::from_word(0b01, 2);
  CHECK(gray::expand_codeword(b01, 2, 5).to_string() == "00110");
  CHECK(gray::expand_codeword(BitString::from_word(1, 1), 1, 1).to_string() == "1");
  CHECK(gray::expand_codeword(BitString::from_word(0b101, 3), 3, 9).to_string() == "111000111");
}

TEST_CASE("expand_codeword scales Hamming distance by the repeat count") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_index(6));
    const int repeat = 1 + static_cast<int>(rng.uniform_index(4));
    const auto a = gray::gray(rng.uniform_index(std::uint64_t{1} << k), k);
    const auto b = gray::gray(rng.uniform_index(std::uint64_t{1} << k), k);
    const std::size_t ambient = static_cast<std::size_t>(k * repeat) + rng.uniform_index(4);
    const auto ea = gray::expand_codeword(a, repeat, ambient);
    const auto eb = gray::expand_codeword(b, repeat, ambient);
    CHECK(gray::hamming(ea, eb) ==
          static_cast<std::size_t>(repeat) * gray::hamming(a, b));
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(gray::gray(8, 3), std::domain_error);
  CHECK_THROWS_AS(gray::gray(0, 0), std::domain_error);
  CHECK_THROWS_AS(gray::gray(0, 31), std::domain_error);
  CHECK_THROWS_AS(gray::expand_codeword(BitString::from_word(0b11, 2), 3, 5), std::domain_error);
  CHECK_THROWS_AS(gray::expand_codeword(BitString::from_word(0b11, 2), 0, 5), std::domain_error);
  CHECK_THROWS_AS(BitString({0, 2, 1}), std::domain_error);
  CHECK_THROWS_AS(BitString(std::vector<std::uint8_t>{}), std::domain_error);
}

TEST_CASE("CodeIndex wraps circularly") {
  const auto idx = gray::CodeIndex::wrapped(-1, 3);
  CHECK(idx.value() == 7);
  CHECK(gray::CodeIndex::wrapped(8, 3).value() == 0);
  CHECK(gray::CodeIndex(5, 3).neighbor(3).value() == 0);
  CHECK_THROWS_AS(gray::CodeIndex(8, 3), std::domain_error);
}
