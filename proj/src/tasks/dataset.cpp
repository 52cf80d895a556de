#include "nbloom/tasks/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "nbloom/error.hpp"
#include "nbloom/hash.hpp"
#include "nbloom/rng.hpp"

namespace nbloom::tasks {

std::string item_key(const Item& item) {
  if (const auto* s = std::get_if<std::string>(&item)) return *s;
  const auto& v = std::get<std::vector<double>>(item);
  std::string key;
  key.reserve(v.size() * 8);
  for (double d : v) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) key.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  return key;
}

Dataset::Dataset(Modality modality, std::vector<Item> items, std::vector<int> labels)
    : modality_(modality), items_(std::move(items)), labels_(std::move(labels)) {
  if (!labels_.empty() && labels_.size() != items_.size()) {
    throw DataError("dataset: " + std::to_string(labels_.size()) + " labels for " +
                    std::to_string(items_.size()) + " items");
  }
  for (const Item& it : items_) {
    const bool text = std::holds_alternative<std::string>(it);
    if (text != (modality_ == Modality::text)) throw DataError("dataset: item modality mismatch");
  }
  if (modality_ == Modality::dense && !items_.empty()) {
    const std::size_t d = std::get<std::vector<double>>(items_.front()).size();
    for (const Item& it : items_) {
      if (std::get<std::vector<double>>(it).size() != d) throw DataError("dataset: ragged dense items");
    }
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) classes_[labels_[i]].push_back(i);
  permutation_.resize(items_.size());
  std::iota(permutation_.begin(), permutation_.end(), 0);
}

std::size_t Dataset::dim() const {
  if (modality_ != Modality::dense || items_.empty()) return 0;
  return std::get<std::vector<double>>(items_.front()).size();
}

void Dataset::set_permutation(std::vector<std::size_t> p) {
  if (p.size() != items_.size()) throw DataError("dataset: permutation size mismatch");
  std::vector<bool> seen(p.size(), false);
  for (auto i : p) {
    if (i >= p.size() || seen[i]) throw DataError("dataset: permutation is not a bijection");
    seen[i] = true;
  }
  permutation_ = std::move(p);
}

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = 0x243f6a8885a308d3ULL ^ items_.size();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    h = fmix64(h ^ hash_bytes(item_key(items_[i]), 0x13198a2e03707344ULL));
    if (!labels_.empty()) h = fmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(labels_[i])));
  }
  return h;
}

Split split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::round(test_fraction * static_cast<double>(data.size())));
  if (n_test == 0 || n_test >= data.size()) throw DataError("split: dataset too small to split");

  auto build = [&](std::span<const std::size_t> idx, std::uint64_t perm_seed) {
    std::vector<std::size_t> sorted(idx.begin(), idx.end());
    std::vector<Item> items;
    std::vector<int> labels;
    if (data.modality() == Modality::text) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return std::get<std::string>(data.item(a)) < std::get<std::string>(data.item(b));
      });
    } else {
      std::sort(sorted.begin(), sorted.end());
    }
    for (auto i : sorted) {
      items.push_back(data.item(i));
      if (data.has_labels()) labels.push_back(data.label(i));
    }
    Dataset out(data.modality(), std::move(items), std::move(labels));
    std::vector<std::size_t> perm(out.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng prng(perm_seed);
    prng.shuffle(perm);
    out.set_permutation(std::move(perm));
    return out;
  };
  std::span<const std::size_t> all(order);
  Split s;
  s.test = build(all.first(n_test), splitmix64(seed ^ 1));
  s.train = build(all.subspan(n_test), splitmix64(seed ^ 2));
  return s;
}

}  // namespace nbloom::tasks
