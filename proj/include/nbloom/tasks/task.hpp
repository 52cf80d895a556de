#pragma once

#include <optional>
#include <string>

#include "nbloom/rng.hpp"
#include "nbloom/tasks/dataset.hpp"

namespace nbloom::tasks {

enum class TaskKind { class_based, exponential, uniform, database_range };

std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& s);

struct TaskSpec {
  TaskKind kind = TaskKind::class_based;
  std::size_t n = 50;
  // When nonzero, each episode draws its set size uniformly from [n_min, n].
  std::size_t n_min = 0;
  // Queries per episode; 0 means t = n.
  std::size_t t = 0;
  // Share of positive queries. Unset: 0.5 for class_based/uniform; queries
  // drawn uniformly over the source for exponential/database_range.
  std::optional<double> positive_fraction;
  double decay = 0.999;

  void validate() const;
};

// Samples one episode; labels are exact membership of the query item index.
Episode sample_episode(const TaskSpec& spec, const Dataset& data, Rng& rng);
// Same with the set size fixed to n (ignores n_min).
Episode sample_episode(const TaskSpec& spec, const Dataset& data, Rng& rng, std::size_t n);

Episode sample_class_based(Rng& rng, const Dataset& data, std::size_t n, std::size_t t,
                           double positive_fraction = 0.5);
Episode sample_exponential(Rng& rng, const Dataset& data, std::size_t n, std::size_t t, double decay = 0.999,
                           std::optional<double> positive_fraction = std::nullopt);
Episode sample_uniform(Rng& rng, const Dataset& data, std::size_t n, std::size_t t,
                       double positive_fraction = 0.5);
// S = universe[start, start + n); a random start when none is given.
Episode sample_database_range(Rng& rng, const Dataset& universe, std::size_t n, std::size_t t,
                              std::optional<double> positive_fraction = std::nullopt,
                              std::optional<std::size_t> start = std::nullopt);

}  // namespace nbloom::tasks
