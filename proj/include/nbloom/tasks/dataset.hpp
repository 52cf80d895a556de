#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nbloom::tasks {

// A stored or queried element: a dense feature vector or a byte string.
using Item = std::variant<std::vector<double>, std::string>;

enum class Modality { dense, text };

// Bytes identifying an item for classical filters (dense values are written
// as little-endian IEEE doubles).
std::string item_key(const Item& item);

struct Episode {
  std::vector<Item> storage;
  std::vector<Item> queries;
  std::vector<int> labels;  // 1 iff queries[j] is in storage
  std::vector<std::size_t> storage_ids;
  std::vector<std::size_t> query_ids;
};

// Items plus optional class labels. Text universes are kept sorted and unique.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Modality modality, std::vector<Item> items, std::vector<int> labels = {});

  Modality modality() const noexcept { return modality_; }
  std::size_t size() const noexcept { return items_.size(); }
  const Item& item(std::size_t i) const { return items_.at(i); }
  const std::vector<Item>& items() const noexcept { return items_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  int label(std::size_t i) const { return labels_.at(i); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  // Item indices grouped by class label (ascending label order).
  const std::map<int, std::vector<std::size_t>>& classes() const noexcept { return classes_; }
  // Dense feature width (0 for text).
  std::size_t dim() const;

  // Fixed seeded shuffle used by exponential sampling.
  const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }
  void set_permutation(std::vector<std::size_t> p);

  std::uint64_t checksum() const;

 private:
  Modality modality_ = Modality::dense;
  std::vector<Item> items_;
  std::vector<int> labels_;
  std::map<int, std::vector<std::size_t>> classes_;
  std::vector<std::size_t> permutation_;
};

struct Split {
  Dataset train;
  Dataset test;
};

// Disjoint random split. Text halves are re-sorted; permutations regenerated.
Split split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace nbloom::tasks
