#include "nbloom/hash.hpp"

namespace nbloom {

namespace {

constexpr std::uint64_t kMulA = 0x87c37b91114253d5ULL;
constexpr std::uint64_t kMulB = 0x4cf5ad432745937fULL;

std::uint64_t rotl(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

std::uint64_t load_le(const std::uint8_t* p, std::size_t len) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < len; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t hash_bytes(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed ^ (bytes.size() * kMulA);
  const std::uint8_t* p = bytes.data();
  std::size_t remaining = bytes.size();
  while (remaining >= 8) {
    std::uint64_t k = load_le(p, 8);
    k *= kMulA;
    k = rotl(k, 31);
    k *= kMulB;
    h ^= k;
    h = rotl(h, 27) * 5 + 0x52dce729;
    p += 8;
    remaining -= 8;
  }
  if (remaining > 0) {
    std::uint64_t k = load_le(p, remaining);
    k *= kMulA;
    k = rotl(k, 31);
    k *= kMulB;
    h ^= k;
  }
  return fmix64(h ^ bytes.size());
}

}  // namespace nbloom
