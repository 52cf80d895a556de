#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nbloom/filters/bloom.hpp"
#include "nbloom/filters/cuckoo.hpp"
#include "nbloom/model/familiarity.hpp"
#include "nbloom/tasks/task.hpp"

namespace nbloom::bench {

using tasks::Episode;
using tasks::Item;

// Anything that answers membership for a set it was built from.
class SetOracle {
 public:
  virtual ~SetOracle() = default;
  virtual std::string name() const = 0;
  virtual void build(std::span<const Item> storage) = 0;
  virtual std::vector<std::uint8_t> query(std::span<const Item> queries) const = 0;
};

class BloomOracle : public SetOracle {
 public:
  BloomOracle(double epsilon, std::uint64_t seed = 0) : epsilon_(epsilon), seed_(seed) {}
  std::string name() const override { return "bloom"; }
  void build(std::span<const Item> storage) override;
  std::vector<std::uint8_t> query(std::span<const Item> queries) const override;
  const filters::BloomFilter& filter() const { return filter_; }

 private:
  double epsilon_;
  std::uint64_t seed_;
  filters::BloomFilter filter_{1, 1};
};

class CuckooOracle : public SetOracle {
 public:
  CuckooOracle(double epsilon, std::uint64_t seed = 0) : epsilon_(epsilon), seed_(seed) {}
  std::string name() const override { return "cuckoo"; }
  void build(std::span<const Item> storage) override;
  std::vector<std::uint8_t> query(std::span<const Item> queries) const override;

 private:
  double epsilon_;
  std::uint64_t seed_;
  std::unique_ptr<filters::CuckooFilter> filter_;
};

// Model positive when logit >= threshold.
class ModelOracle : public SetOracle {
 public:
  ModelOracle(const model::FamiliarityModel& m, double threshold, std::string name = "model")
      : model_(&m), threshold_(threshold), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  void build(std::span<const Item> storage) override { state_ = model_->write(storage); }
  std::vector<std::uint8_t> query(std::span<const Item> queries) const override;

 private:
  const model::FamiliarityModel* model_;
  double threshold_;
  std::string name_;
  diff::Array state_;
};

class ConstantOracle : public SetOracle {
 public:
  explicit ConstantOracle(bool answer) : answer_(answer) {}
  std::string name() const override { return answer_ ? "always_yes" : "always_no"; }
  void build(std::span<const Item>) override {}
  std::vector<std::uint8_t> query(std::span<const Item> queries) const override {
    return std::vector<std::uint8_t>(queries.size(), answer_ ? 1 : 0);
  }

 private:
  bool answer_;
};

struct RateEstimate {
  double rate = 0.0;
  std::size_t errors = 0;
  std::size_t trials = 0;
  double ci_low = 0.0;   // Wilson 99% interval
  double ci_high = 1.0;
};

// Wilson score interval; z = 2.5758 gives 99% coverage.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 2.5758293035489);

struct MeasuredRates {
  RateEstimate fpr;
  RateEstimate fnr;
  std::size_t queries = 0;
  std::size_t episodes = 0;
};

using EpisodeSource = std::function<Episode(std::size_t index)>;

// Builds the oracle on each episode's storage and scores its queries until
// `query_budget` queries have been answered.
MeasuredRates measure_fpr_fnr(SetOracle& oracle, const EpisodeSource& episodes, std::size_t query_budget = 50000);

// Episodes from a task with fixed set size n, drawn from a seeded stream.
EpisodeSource task_episodes(const tasks::TaskSpec& task, const tasks::Dataset& data, std::size_t n, std::uint64_t seed);

struct Calibration {
  double threshold = 0.0;
  std::size_t negatives = 0;
  double validation_fpr = 0.0;
};

inline constexpr std::size_t kMinCalibrationNegatives = 10000;

// Loosest threshold whose validation FPR is at most epsilon: the threshold
// sits between the (k+1)-th and k-th largest negative logits, k = floor(eps N).
Calibration calibrate_threshold(std::span<const double> negative_logits, double epsilon,
                                std::size_t min_negatives = kMinCalibrationNegatives);
Calibration calibrate_threshold(const model::FamiliarityModel& m, std::span<const Episode> validation, double epsilon,
                                std::size_t min_negatives = kMinCalibrationNegatives);
// Samples validation episodes from `source` until enough negatives are seen.
Calibration calibrate_threshold(const model::FamiliarityModel& m, const EpisodeSource& source, double epsilon,
                                std::size_t min_negatives = kMinCalibrationNegatives);

}  // namespace nbloom::bench
