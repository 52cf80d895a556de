#include "nbloom/filters/cuckoo.hpp"

#include <bit>
#include <utility>

#include "nbloom/error.hpp"
#include "nbloom/hash.hpp"
#include "nbloom/serial.hpp"

namespace nbloom::filters {

CuckooFilter::CuckooFilter(std::uint64_t bucket_count, std::uint32_t bucket_size,
                           std::uint32_t fingerprint_bits, std::uint64_t seed, std::uint32_t max_kicks)
    : bucket_count_(bucket_count),
      bucket_size_(bucket_size),
      fingerprint_bits_(fingerprint_bits),
      seed_(seed),
      max_kicks_(max_kicks),
      rng_(seed) {
  if (bucket_count < 1 || !std::has_single_bit(bucket_count)) {
    throw ConfigError("cuckoo: bucket count must be a power of two");
  }
  if (bucket_size < 1) throw ConfigError("cuckoo: bucket size must be positive");
  if (fingerprint_bits < 1 || fingerprint_bits > 32) {
    throw ConfigError("cuckoo: fingerprint bits must lie in [1, 32]");
  }
  table_.assign(bucket_count * bucket_size, 0);
}

CuckooFilter CuckooFilter::for_capacity(std::uint64_t n, double epsilon, std::uint64_t seed,
                                        std::uint32_t bucket_size, std::uint32_t max_kicks) {
  const auto s = cuckoo_size_for(n, epsilon, bucket_size);
  return CuckooFilter(s.bucket_count, s.bucket_size, s.fingerprint_bits, seed, max_kicks);
}

CuckooFilter::Location CuckooFilter::locate(std::string_view key) const {
  const std::uint64_t h = hash_bytes(key, seed_);
  const std::uint64_t mask = fingerprint_bits_ == 32 ? 0xffffffffULL : ((1ULL << fingerprint_bits_) - 1);
  auto fp = static_cast<std::uint32_t>((h >> 32) & mask);
  if (fp == 0) fp = 1;
  return {h & (bucket_count_ - 1), fp};
}

std::uint64_t CuckooFilter::alternate(std::uint64_t bucket, std::uint32_t fingerprint) const {
  return (bucket ^ fmix64(fingerprint ^ seed_)) & (bucket_count_ - 1);
}

bool CuckooFilter::try_place(std::uint64_t bucket, std::uint32_t fingerprint) {
  std::uint32_t* slots = bucket_ptr(bucket);
  for (std::uint32_t i = 0; i < bucket_size_; ++i) {
    if (slots[i] == 0) {
      slots[i] = fingerprint;
      return true;
    }
  }
  return false;
}

bool CuckooFilter::contains_in(std::uint64_t bucket, std::uint32_t fingerprint) const {
  const std::uint32_t* slots = bucket_ptr(bucket);
  for (std::uint32_t i = 0; i < bucket_size_; ++i) {
    if (slots[i] == fingerprint) return true;
  }
  return false;
}

bool CuckooFilter::insert(std::string_view key) {
  const auto loc = locate(key);
  const std::uint64_t i1 = loc.bucket;
  const std::uint64_t i2 = alternate(i1, loc.fingerprint);
  if (try_place(i1, loc.fingerprint) || try_place(i2, loc.fingerprint)) {
    ++stored_;
    return true;
  }

  // Displacement. Each swap is logged so a failed insert can be rolled back.
  struct Swap {
    std::uint64_t index;
    std::uint32_t previous;
  };
  std::vector<Swap> log;
  const Rng rng_before = rng_;
  std::uint64_t bucket = rng_.bernoulli(0.5) ? i1 : i2;
  std::uint32_t fp = loc.fingerprint;
  for (std::uint32_t kick = 0; kick < max_kicks_; ++kick) {
    const std::uint64_t index = bucket * bucket_size_ + rng_.index(bucket_size_);
    log.push_back({index, table_[index]});
    std::swap(fp, table_[index]);
    bucket = alternate(bucket, fp);
    if (try_place(bucket, fp)) {
      ++stored_;
      return true;
    }
  }
  for (auto it = log.rbegin(); it != log.rend(); ++it) table_[it->index] = it->previous;
  rng_ = rng_before;
  return false;
}

bool CuckooFilter::query(std::string_view key) const {
  const auto loc = locate(key);
  return contains_in(loc.bucket, loc.fingerprint) ||
         contains_in(alternate(loc.bucket, loc.fingerprint), loc.fingerprint);
}

bool CuckooFilter::erase(std::string_view key) {
  const auto loc = locate(key);
  for (std::uint64_t b : {loc.bucket, alternate(loc.bucket, loc.fingerprint)}) {
    std::uint32_t* slots = bucket_ptr(b);
    for (std::uint32_t i = 0; i < bucket_size_; ++i) {
      if (slots[i] == loc.fingerprint) {
        slots[i] = 0;
        --stored_;
        return true;
      }
    }
  }
  return false;
}

bool CuckooFilter::check_invariants() const {
  const std::uint64_t limit = fingerprint_bits_ == 32 ? 0xffffffffULL : ((1ULL << fingerprint_bits_) - 1);
  std::uint64_t count = 0;
  for (auto fp : table_) {
    if (fp > limit) return false;
    count += fp != 0;
  }
  return count == stored_;
}

std::vector<std::uint8_t> CuckooFilter::serialize() const {
  ByteWriter out("CKF1");
  out.u64(bucket_count_);
  out.u64(bucket_size_);
  out.u64(fingerprint_bits_);
  out.u64(max_kicks_);
  out.u64(seed_);
  out.u64(stored_);
  for (auto fp : table_) out.u32(fp);
  return out.take();
}

CuckooFilter CuckooFilter::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "CKF1");
  const auto buckets = in.u64();
  const auto bucket_size = in.u64();
  const auto fp_bits = in.u64();
  const auto kicks = in.u64();
  const auto seed = in.u64();
  const auto stored = in.u64();
  if (bucket_size > 64 || fp_bits > 32 || buckets > (1ULL << 40)) {
    throw DataError("CKF1: invalid geometry in header");
  }
  CuckooFilter f(buckets, static_cast<std::uint32_t>(bucket_size), static_cast<std::uint32_t>(fp_bits), seed,
                 static_cast<std::uint32_t>(kicks));
  for (auto& fp : f.table_) fp = in.u32();
  in.expect_end();
  f.stored_ = stored;
  if (!f.check_invariants()) throw DataError("CKF1: payload inconsistent with header");
  return f;
}

}  // namespace nbloom::filters
