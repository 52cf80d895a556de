#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "nbloom/tasks/dataset.hpp"

namespace nbloom::tasks {

struct ClusterSpec {
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t per_class = 500;
  double noise = 0.1;
};

struct TokenSpec {
  std::size_t count = 25000;
  std::size_t min_length = 4;
  std::size_t max_length = 12;
};

// C centers on the unit sphere; items = center + N(0, noise^2) per coordinate.
Dataset synthetic_clusters(const ClusterSpec& spec, std::uint64_t seed);
// Random lowercase strings with lengths uniform in [min, max], unique, sorted.
Dataset synthetic_tokens(const TokenSpec& spec, std::uint64_t seed);

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
};

// Reads magic and dimension sizes only (payload is not checked).
IdxHeader parse_idx_header(std::span<const std::uint8_t> bytes);

// IDX images (magic 0x00000803) flattened to [0, 1]; optional labels (0x00000801).
Dataset parse_idx(std::span<const std::uint8_t> images, std::optional<std::span<const std::uint8_t>> labels);
Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels);

struct TokenUniverse {
  Dataset data;
  std::size_t lines = 0;
  std::size_t duplicates_removed = 0;
};

// Newline-delimited tokens, deduplicated and sorted bytewise. Empty lines and
// trailing '\r' are dropped.
TokenUniverse parse_token_universe(std::string_view text);
TokenUniverse load_token_universe(const std::filesystem::path& path);

enum class SourceKind { synthetic_clusters, idx_images, token_file, synthetic_tokens };

std::string to_string(SourceKind k);
SourceKind parse_source_kind(const std::string& s);

struct DatasetSource {
  SourceKind kind = SourceKind::synthetic_clusters;
  ClusterSpec clusters;
  TokenSpec tokens;
  std::string images_path;
  std::string labels_path;
  std::string token_path;
};

// Loads or generates the source; the exponential-sampling permutation is a
// shuffle seeded from `seed`.
Dataset load_source(const DatasetSource& source, std::uint64_t seed);

nlohmann::json dataset_manifest(const DatasetSource& source, const Dataset& data, std::uint64_t seed);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace nbloom::tasks
