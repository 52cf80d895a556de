#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nbloom/filters/sizing.hpp"
#include "nbloom/rng.hpp"

namespace nbloom::filters {

// Cuckoo filter with partial-key hashing: a key's two candidate buckets are
// i1 = h(x) and i2 = i1 xor h(fingerprint), so either is recoverable from the
// other plus the stored fingerprint. Fingerprint 0 marks an empty entry.
class CuckooFilter {
 public:
  CuckooFilter(std::uint64_t bucket_count, std::uint32_t bucket_size, std::uint32_t fingerprint_bits,
               std::uint64_t seed = 0, std::uint32_t max_kicks = 500);
  static CuckooFilter for_capacity(std::uint64_t n, double epsilon, std::uint64_t seed = 0,
                                   std::uint32_t bucket_size = 4, std::uint32_t max_kicks = 500);

  // False when max_kicks displacements fail; the filter is then unchanged.
  bool insert(std::string_view key);
  bool query(std::string_view key) const;
  // Removes one matching fingerprint; false if none was present.
  bool erase(std::string_view key);

  std::uint64_t bucket_count() const noexcept { return bucket_count_; }
  std::uint32_t bucket_size() const noexcept { return bucket_size_; }
  std::uint32_t fingerprint_bits() const noexcept { return fingerprint_bits_; }
  std::uint32_t max_kicks() const noexcept { return max_kicks_; }
  std::uint64_t size() const noexcept { return stored_; }
  double load_factor() const noexcept {
    return static_cast<double>(stored_) / static_cast<double>(table_.size());
  }
  std::uint64_t size_bits() const noexcept { return table_.size() * fingerprint_bits_; }

  // Every stored fingerprint sits in one of the two buckets its key maps to;
  // checks the table-level half of that: nonzero, within f bits.
  bool check_invariants() const;

  // "CKF1", then bucket_count, bucket_size, fingerprint_bits, max_kicks, seed,
  // stored count as little-endian u64, then one u32 per table entry.
  std::vector<std::uint8_t> serialize() const;
  static CuckooFilter deserialize(std::span<const std::uint8_t> bytes);

 private:
  struct Location {
    std::uint64_t bucket;
    std::uint32_t fingerprint;
  };
  Location locate(std::string_view key) const;
  std::uint64_t alternate(std::uint64_t bucket, std::uint32_t fingerprint) const;
  bool try_place(std::uint64_t bucket, std::uint32_t fingerprint);
  bool contains_in(std::uint64_t bucket, std::uint32_t fingerprint) const;
  std::uint32_t* bucket_ptr(std::uint64_t b) { return table_.data() + b * bucket_size_; }
  const std::uint32_t* bucket_ptr(std::uint64_t b) const { return table_.data() + b * bucket_size_; }

  std::uint64_t bucket_count_;
  std::uint32_t bucket_size_;
  std::uint32_t fingerprint_bits_;
  std::uint64_t seed_;
  std::uint32_t max_kicks_;
  std::uint64_t stored_ = 0;
  std::vector<std::uint32_t> table_;
  Rng rng_;
};

}  // namespace nbloom::filters
