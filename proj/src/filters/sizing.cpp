#include "nbloom/filters/sizing.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "nbloom/error.hpp"

namespace nbloom::filters {

void FilterConfig::validate() const {
  if (n < 1) throw ConfigError("filter: n must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("filter: epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
}

BloomSize bloom_size_for(std::uint64_t n, double epsilon) {
  FilterConfig{n, epsilon}.validate();
  const double bits_per_key = std::log2(1.0 / epsilon) * std::numbers::log2e;
  BloomSize s;
  s.m = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * bits_per_key));
  s.k = static_cast<std::uint32_t>(std::ceil(std::log2(1.0 / epsilon)));
  if (s.k < 1) s.k = 1;
  return s;
}

double analytical_fpr(std::uint64_t m, std::uint64_t n, std::uint32_t k) {
  if (m < 1 || k < 1) throw ConfigError("analytical_fpr: m and k must be positive");
  const double fill = 1.0 - std::exp(-static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(m));
  return std::pow(fill, static_cast<double>(k));
}

double optimal_space_bound(std::uint64_t n, double epsilon) {
  FilterConfig{n, epsilon}.validate();
  return static_cast<double>(n) * std::log2(1.0 / epsilon);
}

CuckooSize cuckoo_size_for(std::uint64_t n, double epsilon, std::uint32_t bucket_size) {
  FilterConfig{n, epsilon}.validate();
  if (bucket_size < 1) throw ConfigError("cuckoo: bucket size must be positive");
  CuckooSize s;
  s.bucket_size = bucket_size;
  s.fingerprint_bits = static_cast<std::uint32_t>(
      std::ceil(std::log2(1.0 / epsilon) + std::log2(2.0 * bucket_size)));
  if (s.fingerprint_bits > 32) throw ConfigError("cuckoo: epsilon too small for 32-bit fingerprints");
  const auto needed = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(n) / (bucket_size * kCuckooMaxLoad)));
  s.bucket_count = std::bit_ceil(std::max<std::uint64_t>(needed, 1));
  return s;
}

}  // namespace nbloom::filters
