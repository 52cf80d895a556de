#include "nbloom/tasks/task.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "nbloom/error.hpp"

namespace nbloom::tasks {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::class_based: return "class_based";
    case TaskKind::exponential: return "exponential";
    case TaskKind::uniform: return "uniform";
    case TaskKind::database_range: return "database_range";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "class_based") return TaskKind::class_based;
  if (s == "exponential") return TaskKind::exponential;
  if (s == "uniform") return TaskKind::uniform;
  if (s == "database_range") return TaskKind::database_range;
  throw ConfigError("unknown task kind '" + s + "'");
}

void TaskSpec::validate() const {
  if (n == 0) throw ConfigError("task.n must be >= 1");
  if (n_min > n) throw ConfigError("task.n_min must not exceed task.n");
  if (positive_fraction && !(*positive_fraction >= 0.0 && *positive_fraction <= 1.0)) {
    throw ConfigError("task.positive_fraction must lie in [0, 1]");
  }
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("task.decay must lie in (0, 1]");
}

namespace {

// Fills queries: round(p t) positives drawn uniformly from the stored ids,
// the rest from `negative`, then shuffles. Falls back to all-positive
// queries when there are no non-members.
template <typename NegativeDraw>
void fill_mixed_queries(Episode& ep, const Dataset& data, Rng& rng, std::size_t t, double p,
                        const std::unordered_set<std::size_t>& members, bool have_negatives, NegativeDraw negative) {
  auto n_pos = static_cast<std::size_t>(std::round(p * static_cast<double>(t)));
  if (!have_negatives) n_pos = t;
  std::vector<std::size_t> ids;
  ids.reserve(t);
  for (std::size_t j = 0; j < n_pos; ++j) ids.push_back(ep.storage_ids[rng.index(ep.storage_ids.size())]);
  for (std::size_t j = n_pos; j < t; ++j) ids.push_back(negative());
  rng.shuffle(ids);
  for (auto id : ids) {
    ep.query_ids.push_back(id);
    ep.queries.push_back(data.item(id));
    ep.labels.push_back(members.count(id) ? 1 : 0);
  }
}

void fill_natural_queries(Episode& ep, const Dataset& data, Rng& rng, std::size_t t,
                          const std::unordered_set<std::size_t>& members) {
  for (std::size_t j = 0; j < t; ++j) {
    const auto id = static_cast<std::size_t>(rng.index(data.size()));
    ep.query_ids.push_back(id);
    ep.queries.push_back(data.item(id));
    ep.labels.push_back(members.count(id) ? 1 : 0);
  }
}

void store(Episode& ep, const Dataset& data, std::vector<std::size_t> ids) {
  ep.storage_ids = std::move(ids);
  for (auto id : ep.storage_ids) ep.storage.push_back(data.item(id));
}

// Uniform over ids not in `members`, by rejection (the member set is small
// relative to the source in every supported task).
std::size_t draw_non_member(Rng& rng, std::size_t universe, const std::unordered_set<std::size_t>& members) {
  for (;;) {
    const auto id = static_cast<std::size_t>(rng.index(universe));
    if (!members.count(id)) return id;
  }
}

void check_size(const Dataset& data, std::size_t n, std::size_t t, const char* what) {
  if (n == 0 || t == 0) throw ConfigError(std::string(what) + ": n and t must be >= 1");
  if (data.size() < n) {
    throw DataError(std::string(what) + ": source has " + std::to_string(data.size()) + " items, need " +
                    std::to_string(n));
  }
}

}  // namespace

Episode sample_class_based(Rng& rng, const Dataset& data, std::size_t n, std::size_t t, double positive_fraction) {
  check_size(data, n, t, "class_based");
  if (!data.has_labels()) throw DataError("class_based: source has no class labels");
  std::vector<int> eligible;
  for (const auto& [label, ids] : data.classes()) {
    if (ids.size() >= n) eligible.push_back(label);
  }
  if (eligible.empty()) throw DataError("class_based: no class holds " + std::to_string(n) + " items");
  const int label = eligible[rng.index(eligible.size())];
  std::vector<std::size_t> pool = data.classes().at(label);
  // Partial Fisher-Yates: the first n entries are a uniform sample.
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  pool.resize(n);
  Episode ep;
  store(ep, data, pool);
  const std::unordered_set<std::size_t> members(pool.begin(), pool.end());
  const std::size_t outside = data.size() - data.classes().at(label).size();
  fill_mixed_queries(ep, data, rng, t, positive_fraction, members, outside > 0, [&] {
    for (;;) {
      const auto id = static_cast<std::size_t>(rng.index(data.size()));
      if (data.label(id) != label) return id;
    }
  });
  return ep;
}

Episode sample_uniform(Rng& rng, const Dataset& data, std::size_t n, std::size_t t, double positive_fraction) {
  check_size(data, n, t, "uniform");
  std::vector<std::size_t> ids;
  std::unordered_set<std::size_t> members;
  if (n * 2 > data.size()) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < n; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
    ids.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    members.insert(ids.begin(), ids.end());
  } else {
    while (ids.size() < n) {
      const auto id = static_cast<std::size_t>(rng.index(data.size()));
      if (members.insert(id).second) ids.push_back(id);
    }
  }
  Episode ep;
  store(ep, data, ids);
  fill_mixed_queries(ep, data, rng, t, positive_fraction, members, n < data.size(),
                     [&] { return draw_non_member(rng, data.size(), members); });
  return ep;
}

Episode sample_exponential(Rng& rng, const Dataset& data, std::size_t n, std::size_t t, double decay,
                           std::optional<double> positive_fraction) {
  check_size(data, n, t, "exponential");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("exponential: decay must lie in (0, 1]");
  // Weighted sampling without replacement: keep the n largest log(u) / w.
  const auto& perm = data.permutation();
  const double log_decay = std::log(decay);
  std::vector<std::pair<double, std::size_t>> keys(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double log_w = static_cast<double>(i) * log_decay;
    const double key = log_w < -700.0 ? -std::numeric_limits<double>::infinity() : std::log(u) / std::exp(log_w);
    keys[i] = {key, perm[i]};
  }
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n - 1), keys.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(keys[i].second);
  Episode ep;
  store(ep, data, ids);
  const std::unordered_set<std::size_t> members(ids.begin(), ids.end());
  if (positive_fraction) {
    fill_mixed_queries(ep, data, rng, t, *positive_fraction, members, n < data.size(),
                       [&] { return draw_non_member(rng, data.size(), members); });
  } else {
    fill_natural_queries(ep, data, rng, t, members);
  }
  return ep;
}

Episode sample_database_range(Rng& rng, const Dataset& universe, std::size_t n, std::size_t t,
                              std::optional<double> positive_fraction, std::optional<std::size_t> start) {
  check_size(universe, n, t, "database_range");
  const std::size_t begin = start ? *start : static_cast<std::size_t>(rng.index(universe.size() - n + 1));
  if (begin + n > universe.size()) throw DataError("database_range: range runs past the universe");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), begin);
  Episode ep;
  store(ep, universe, ids);
  const std::unordered_set<std::size_t> members(ids.begin(), ids.end());
  if (positive_fraction) {
    fill_mixed_queries(ep, universe, rng, t, *positive_fraction, members, n < universe.size(),
                       [&] { return draw_non_member(rng, universe.size(), members); });
  } else {
    fill_natural_queries(ep, universe, rng, t, members);
  }
  return ep;
}

Episode sample_episode(const TaskSpec& spec, const Dataset& data, Rng& rng, std::size_t n) {
  spec.validate();
  const std::size_t t = spec.t == 0 ? n : spec.t;
  switch (spec.kind) {
    case TaskKind::class_based: return sample_class_based(rng, data, n, t, spec.positive_fraction.value_or(0.5));
    case TaskKind::uniform: return sample_uniform(rng, data, n, t, spec.positive_fraction.value_or(0.5));
    case TaskKind::exponential: return sample_exponential(rng, data, n, t, spec.decay, spec.positive_fraction);
    case TaskKind::database_range: return sample_database_range(rng, data, n, t, spec.positive_fraction);
  }
  throw ConfigError("unknown task kind");
}

Episode sample_episode(const TaskSpec& spec, const Dataset& data, Rng& rng) {
  std::size_t n = spec.n;
  if (spec.n_min != 0 && spec.n_min < spec.n) n = spec.n_min + static_cast<std::size_t>(rng.index(spec.n - spec.n_min + 1));
  return sample_episode(spec, data, rng, n);
}

}  // namespace nbloom::tasks
