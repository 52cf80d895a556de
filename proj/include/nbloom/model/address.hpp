#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nbloom/diff/array.hpp"

namespace nbloom::model {

inline constexpr std::size_t kRowsPerSeed = 16;

// 16 standard-normal address rows of width `dim` from a counter-based
// generator keyed by the seed: identical on every call and platform.
diff::Array regenerate_address_rows(std::uint16_t seed, std::size_t dim);

// Address matrix [slots, dim]; seed i supplies rows 16i .. 16i+15.
diff::Array address_from_seeds(std::span<const std::uint16_t> seeds, std::size_t slots, std::size_t dim);

inline std::size_t seeds_needed(std::size_t slots) { return (slots + kRowsPerSeed - 1) / kRowsPerSeed; }

}  // namespace nbloom::model
