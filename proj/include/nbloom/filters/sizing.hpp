#pragma once

#include <cstddef>
#include <cstdint>

namespace nbloom::filters {

struct FilterConfig {
  std::uint64_t n = 1;   // expected elements
  double epsilon = 0.01; // target false-positive rate, in (0, 1)

  void validate() const;
};

struct BloomSize {
  std::uint64_t m = 0;  // bits
  std::uint32_t k = 0;  // hash functions
};

// m = ceil(n log2(1/eps) log2(e)), k = ceil(log2(1/eps)).
BloomSize bloom_size_for(std::uint64_t n, double epsilon);

// (1 - e^{-kn/m})^k
double analytical_fpr(std::uint64_t m, std::uint64_t n, std::uint32_t k);

// n log2(1/eps): the static lower bound for uniformly drawn sets.
double optimal_space_bound(std::uint64_t n, double epsilon);

struct CuckooSize {
  std::uint64_t bucket_count = 0;  // power of two
  std::uint32_t bucket_size = 4;
  std::uint32_t fingerprint_bits = 0;

  std::uint64_t bits() const { return bucket_count * bucket_size * fingerprint_bits; }
};

inline constexpr double kCuckooMaxLoad = 0.95;

// f = ceil(log2(1/eps) + log2(2b)); buckets = next power of two holding n
// entries at load factor kCuckooMaxLoad.
CuckooSize cuckoo_size_for(std::uint64_t n, double epsilon, std::uint32_t bucket_size = 4);

}  // namespace nbloom::filters
