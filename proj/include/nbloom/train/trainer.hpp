#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nbloom/diff/adam.hpp"
#include "nbloom/model/familiarity.hpp"
#include "nbloom/tasks/task.hpp"

namespace nbloom::train {

struct TrainConfig {
  model::ModelConfig model;
  tasks::TaskSpec task;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;  // episodes per step, gradients averaged
  std::size_t max_steps = 10000;
  std::size_t eval_period = 1000;
  std::size_t eval_episodes = 20;
  std::uint64_t seed = 0;
  // Early stop once an evaluation meets both targets (target_fpr required).
  std::optional<double> target_fpr;
  double target_fnr = 1.0;
  // Global-norm clip; unset means 5 for the LSTM baseline and none otherwise.
  std::optional<double> clip_norm;
  std::size_t workers = 1;

  void validate() const;
  double effective_clip() const;
};

struct LogRow {
  std::size_t step = 0;
  double loss = 0.0;  // mean training loss since the previous row
  double eval_fnr = 0.0;
  double eval_fpr = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::unique_ptr<model::FamiliarityModel> model;
  std::vector<LogRow> log;
  std::size_t steps = 0;
  bool early_stopped = false;
  bool diverged = false;
  std::string diagnostic;
};

struct EpisodeLoss {
  diff::Var loss;
  diff::Var logits;
};

// One-shot write over the episode's storage, logits for every query, mean
// binary cross-entropy. Throws on a non-finite loss.
EpisodeLoss episode_loss(const model::FamiliarityModel& m, const diff::Bindings& p, const tasks::Episode& ep,
                         model::GraphTrace* trace = nullptr);

// Fraction of positives scored below / negatives at or above `threshold`.
struct Rates {
  double fnr = 0.0;
  double fpr = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};
Rates evaluate(const model::FamiliarityModel& m, std::span<const tasks::Episode> episodes, double threshold = 0.0);

// Meta-learning loop. `eval_data` supplies validation episodes; on divergence
// the returned model holds the last finite parameters.
TrainResult train(const TrainConfig& config, const tasks::Dataset& train_data, const tasks::Dataset& eval_data,
                  std::unique_ptr<model::FamiliarityModel> initial = nullptr);

void write_log_csv(std::ostream& out, const std::vector<LogRow>& log);

}  // namespace nbloom::train
