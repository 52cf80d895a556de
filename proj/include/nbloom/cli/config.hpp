#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbloom/model/config.hpp"
#include "nbloom/tasks/sources.hpp"
#include "nbloom/tasks/task.hpp"
#include "nbloom/train/sweep.hpp"
#include "nbloom/train/trainer.hpp"

namespace nbloom::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct DataConfig {
  tasks::DatasetSource source;
  double test_fraction = 0.2;
  // Evaluate on the training split (the exponential task measures memorised
  // storage frequencies, not generalisation).
  bool eval_on_train = false;
};

struct TrainSection {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t max_steps = 10000;
  std::size_t eval_period = 1000;
  std::size_t eval_episodes = 20;
  std::optional<double> target_fpr;
  double target_fnr = 1.0;
  std::optional<double> clip_norm;
};

struct EvalSection {
  double alpha = 0.01;
  unsigned precision = 32;
  std::size_t query_budget = 50000;
  std::size_t calibration_negatives = bench::kMinCalibrationNegatives;
  std::vector<std::size_t> sizes;  // empty: the task's n
  std::string checkpoint;          // empty: <out>/checkpoint.nbp
};

struct BenchSection {
  std::vector<std::size_t> batches{1, 10000};
  std::size_t runs = 5;
  std::size_t warmup = 1;
  std::vector<std::string> artifacts{"bloom", "cuckoo", "nbf", "lstm", "memnet"};
  double epsilon = 0.01;  // classical filter sizing
  std::string checkpoint;  // optional trained model replacing the fresh one of its kind
};

struct CompareSection {
  std::vector<std::string> checkpoints;  // trained models; none means classical rows only
  bool classical = true;
};

// Everything a run depends on. Field names in JSON follow the section and
// member names, e.g. {"nbf": {"m_slots": 10}}, {"task": {"n": 50}}.
struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  model::ModelConfig model;
  tasks::TaskSpec task;
  TrainSection train;
  EvalSection eval;
  BenchSection bench;
  CompareSection compare;
  train::SweepGrid sweep = train::SweepGrid::reference();

  void validate() const;
  train::TrainConfig train_config(std::size_t workers = 1) const;
  bench::CurveOptions curve_options() const;
};

nlohmann::json to_json(const RunConfig& c);
// `j` must only contain known keys with matching types; missing keys take
// their defaults. Errors name the offending dotted key.
RunConfig from_json(const nlohmann::json& j);

nlohmann::json to_json(const model::ModelConfig& m);
model::ModelConfig model_from_json(const nlohmann::json& j);

// Applies "a.b.c=value" to a JSON document. The value is read as JSON when it
// parses as JSON and as a plain string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Reads the file (or starts from {} when `path` is empty), applies the
// overrides in order, fills defaults and validates.
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides);

// Hash of the canonical (defaults filled, keys sorted) serialization.
std::string config_hash(const RunConfig& c);

}  // namespace nbloom::cli
