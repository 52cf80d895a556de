#include "nbloom/model/address.hpp"

#include <cmath>
#include <numbers>

#include "nbloom/error.hpp"
#include "nbloom/rng.hpp"

namespace nbloom::model {

namespace {

double unit_open(std::uint64_t bits) {
  // (0, 1]: never zero so the log below is finite.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

diff::Array regenerate_address_rows(std::uint16_t seed, std::size_t dim) {
  if (dim == 0) throw ConfigError("address rows need a positive width");
  diff::Array rows({kRowsPerSeed, dim});
  const std::uint64_t key = splitmix64(0x5eed000000000000ULL | seed);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    const std::uint64_t pair = i / 2;
    const double u1 = unit_open(splitmix64(key ^ (2 * pair)));
    const double u2 = unit_open(splitmix64(key ^ (2 * pair + 1)));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    rows[i] = radius * std::cos(angle);
    if (i + 1 < rows.size()) rows[i + 1] = radius * std::sin(angle);
  }
  return rows;
}

diff::Array address_from_seeds(std::span<const std::uint16_t> seeds, std::size_t slots, std::size_t dim) {
  if (seeds.size() != seeds_needed(slots)) {
    throw DataError("address: " + std::to_string(seeds.size()) + " seeds for " + std::to_string(slots) +
                    " slots, expected " + std::to_string(seeds_needed(slots)));
  }
  diff::Array a({slots, dim});
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const diff::Array block = regenerate_address_rows(seeds[s], dim);
    for (std::size_t r = 0; r < kRowsPerSeed && s * kRowsPerSeed + r < slots; ++r) {
      auto src = block.row(r);
      std::copy(src.begin(), src.end(), a.row(s * kRowsPerSeed + r).begin());
    }
  }
  return a;
}

}  // namespace nbloom::model
