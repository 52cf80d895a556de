#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nbloom/filters/sizing.hpp"

namespace nbloom::filters {

// Classical Bloom filter with double hashing h_i(x) = h1(x) + i*h2(x) mod m.
class BloomFilter {
 public:
  BloomFilter(std::uint64_t m, std::uint32_t k, std::uint64_t seed = 0);
  static BloomFilter for_capacity(std::uint64_t n, double epsilon, std::uint64_t seed = 0);

  void insert(std::string_view key);
  bool query(std::string_view key) const;

  std::uint64_t bit_count() const noexcept { return m_; }
  std::uint32_t hash_count() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t popcount() const;
  // Size of the bit vector; what the space comparisons charge for.
  std::uint64_t size_bits() const noexcept { return m_; }
  bool test_bit(std::uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  // "BLM1", then m, k, seed as little-endian u64, then the bit words.
  std::vector<std::uint8_t> serialize() const;
  static BloomFilter deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const BloomFilter& other) const = default;

 private:
  template <typename F>
  void for_each_position(std::string_view key, F&& f) const;

  std::uint64_t m_;
  std::uint32_t k_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> words_;
};

}  // namespace nbloom::filters
