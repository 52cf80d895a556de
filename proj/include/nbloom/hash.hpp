#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace nbloom {

// 64-bit keyed hash over a byte string (murmur-style block mixing with the
// fmix64 finalizer). Stable across platforms: input is read little-endian.
std::uint64_t hash_bytes(std::span<const std::uint8_t> bytes, std::uint64_t seed);

inline std::uint64_t hash_bytes(std::string_view s, std::uint64_t seed) {
  return hash_bytes(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()),
      seed);
}

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

}  // namespace nbloom
