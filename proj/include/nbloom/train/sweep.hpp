#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbloom/bench/space.hpp"
#include "nbloom/train/trainer.hpp"

namespace nbloom::train {

struct SweepGrid {
  std::vector<std::size_t> slots;        // NBF memory slots
  std::vector<std::size_t> word_sizes;   // NBF and MemNet word size
  std::vector<std::size_t> hidden;       // LSTM hidden size
  std::vector<double> zca_eta;           // NBF sphering decay
  std::vector<double> learning_rates;

  // The grid the reference experiments swept over.
  static SweepGrid reference();
  void validate() const;
  nlohmann::json to_json() const;
  // Rejects unknown keys; missing keys keep the reference values.
  static SweepGrid from_json(const nlohmann::json& j);
};

struct SweepCell {
  TrainConfig config;
  std::size_t slots = 0;
  std::size_t word_size = 0;
  std::size_t hidden = 0;
  double zca_eta = 0.0;
};

// Combinations relevant to the base model kind; axes a kind does not use are
// held at the base configuration's value.
std::vector<SweepCell> sweep_cells(const SweepGrid& grid, const TrainConfig& base);

struct SweepOptions {
  double alpha = 0.01;  // target FPR of the composite filter
  std::size_t eval_n = 0;  // 0: the task's n
  bench::CurveOptions curve;
};

struct SweepRow {
  SweepCell cell;
  double total_bits = std::numeric_limits<double>::infinity();
  double fpr = 0.0;
  double fnr = 0.0;
  std::size_t params = 0;
  std::size_t steps = 0;
  bool diverged = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;
  std::unique_ptr<model::FamiliarityModel> best_model;
};

// Index of the least total space, ties to fewer parameters, then grid order.
std::size_t select_best(const std::vector<SweepRow>& rows);

// Trains every cell, scores it by the composite total space at options.alpha
// on `validation`, and keeps the smallest.
SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const tasks::Dataset& train_data,
                  const tasks::Dataset& validation, const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace nbloom::train
