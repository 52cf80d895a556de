#include "nbloom/filters/bloom.hpp"

#include <bit>
#include <cstring>

#include "nbloom/error.hpp"
#include "nbloom/serial.hpp"
#include "nbloom/hash.hpp"

namespace nbloom::filters {

BloomFilter::BloomFilter(std::uint64_t m, std::uint32_t k, std::uint64_t seed)
    : m_(m), k_(k), seed_(seed), words_((m + 63) / 64, 0) {
  if (m < 1) throw ConfigError("bloom: m must be at least 1");
  if (k < 1 || k > 64) throw ConfigError("bloom: k must lie in [1, 64]");
}

BloomFilter BloomFilter::for_capacity(std::uint64_t n, double epsilon, std::uint64_t seed) {
  const auto s = bloom_size_for(n, epsilon);
  return BloomFilter(s.m, s.k, seed);
}

template <typename F>
void BloomFilter::for_each_position(std::string_view key, F&& f) const {
  const std::uint64_t h1 = hash_bytes(key, seed_);
  const std::uint64_t h2 = fmix64(h1 ^ 0x9e3779b97f4a7c15ULL ^ seed_) | 1;
  std::uint64_t h = h1;
  for (std::uint32_t i = 0; i < k_; ++i) {
    f(h % m_);
    h += h2;
  }
}

void BloomFilter::insert(std::string_view key) {
  for_each_position(key, [&](std::uint64_t pos) { words_[pos >> 6] |= std::uint64_t{1} << (pos & 63); });
}

bool BloomFilter::query(std::string_view key) const {
  bool hit = true;
  for_each_position(key, [&](std::uint64_t pos) { hit = hit && test_bit(pos); });
  return hit;
}

std::uint64_t BloomFilter::popcount() const {
  std::uint64_t n = 0;
  for (auto w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
  return n;
}

std::vector<std::uint8_t> BloomFilter::serialize() const {
  ByteWriter out("BLM1");
  out.u64(m_);
  out.u64(k_);
  out.u64(seed_);
  for (auto w : words_) out.u64(w);
  return out.take();
}

BloomFilter BloomFilter::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "BLM1");
  const auto m = in.u64();
  const auto k = in.u64();
  const auto seed = in.u64();
  if (k < 1 || k > 64 || m < 1) throw DataError("BLM1: invalid geometry in header");
  BloomFilter f(m, static_cast<std::uint32_t>(k), seed);
  for (auto& w : f.words_) w = in.u64();
  in.expect_end();
  return f;
}

}  // namespace nbloom::filters
