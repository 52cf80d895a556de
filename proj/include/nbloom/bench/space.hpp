#pragma once

#include <nlohmann/json.hpp>

#include "nbloom/bench/evaluate.hpp"

namespace nbloom::bench {

void validate_precision(unsigned precision_bits);

// A trained model with its operating point and the precision its state is
// accounted at.
struct CalibratedModel {
  const model::FamiliarityModel* model = nullptr;
  double threshold = 0.0;
  unsigned precision = 32;

  void validate() const;
};

// A thresholded model over one stored set plus a Bloom filter holding the
// stored items the model misses, so no stored item is ever rejected.
struct CompositeFilter {
  const model::FamiliarityModel* model = nullptr;
  double threshold = 0.0;
  double delta = 0.0;  // backup filter target FPR
  unsigned precision = 32;
  diff::Array state;
  std::size_t stored = 0;
  std::size_t n_fn = 0;
  filters::BloomFilter backup{1, 1};

  std::vector<std::uint8_t> query(std::span<const Item> queries) const;
  std::uint64_t state_bits() const;
};

// Writes `storage`, queries every stored item, and inserts the misses into a
// backup sized by bloom_size_for(max(n_fn, 1), delta). Verifies exhaustively
// that the composite accepts every stored item.
CompositeFilter build_composite(const model::FamiliarityModel& m, double threshold, std::span<const Item> storage,
                                double delta, unsigned precision = 32, std::uint64_t seed = 0);
CompositeFilter build_composite(const CalibratedModel& calibrated, std::span<const Item> storage, double delta,
                                std::uint64_t seed = 0);

struct SpaceReport {
  std::size_t n = 0;
  double alpha = 0.0;
  unsigned precision = 32;
  std::uint64_t state_bits = 0;
  std::uint64_t backup_bits = 0;
  std::uint64_t total_bits = 0;
  std::size_t n_fn = 0;
  // Filled in by callers that measure the composite.
  double measured_fpr = 0.0;
  double fpr_ci_low = 0.0;
  double fpr_ci_high = 1.0;
  // Classical filters for the same (n, alpha).
  std::uint64_t bloom_bits = 0;
  std::uint64_t cuckoo_bits = 0;

  nlohmann::json to_json() const;
};

// Requires the composite to have been built with delta = alpha / 2.
SpaceReport total_space(const CompositeFilter& composite, double alpha);

struct CompositeOracle : SetOracle {
  CompositeOracle(const model::FamiliarityModel& m, double threshold, double delta, unsigned precision = 32)
      : model(&m), threshold(threshold), delta(delta), precision(precision) {}
  std::string name() const override { return "composite"; }
  void build(std::span<const Item> storage) override;
  std::vector<std::uint8_t> query(std::span<const Item> queries) const override { return current.query(queries); }

  const model::FamiliarityModel* model;
  double threshold;
  double delta;
  unsigned precision;
  CompositeFilter current;
  std::uint64_t builds = 0;
};

struct NeuralArtifact {
  std::string name;
  const model::FamiliarityModel* model = nullptr;
};

struct CurveOptions {
  double alpha = 0.01;
  unsigned precision = 32;
  std::size_t calibration_negatives = kMinCalibrationNegatives;
  std::size_t query_budget = 50000;
  std::uint64_t seed = 0;
  bool classical = true;  // include bloom and cuckoo rows
};

struct CurveRow {
  std::string model;
  std::size_t n = 0;
  double state_bits = 0.0;
  double backup_bits = 0.0;   // mean over evaluated stored sets
  double total_bits = 0.0;    // mean over evaluated stored sets
  double max_total_bits = 0.0;
  double fpr = 0.0;           // composite (or classical filter) FPR
  double fnr = 0.0;           // model alone, at the calibrated threshold
  double composite_fnr = 0.0; // over every stored item of every set
  double threshold = 0.0;
  std::size_t episodes = 0;
};

// For every size: calibrate at epsilon = alpha / 2 on `validation`, then
// build a composite per test episode and measure space and rates.
std::vector<CurveRow> space_curve(std::span<const NeuralArtifact> artifacts, const tasks::TaskSpec& task,
                                  const tasks::Dataset& validation, const tasks::Dataset& test,
                                  std::span<const std::size_t> sizes, const CurveOptions& options);

// Same measurement for one model across sizes beyond its training range.
std::vector<CurveRow> extrapolation_curve(const NeuralArtifact& artifact, const tasks::TaskSpec& task,
                                          const tasks::Dataset& validation, const tasks::Dataset& test,
                                          std::span<const std::size_t> sizes, const CurveOptions& options);

struct ParamCount {
  std::size_t trainable = 0;
  std::size_t total = 0;           // including fixed arrays (addresses, sphering)
  std::uint64_t bytes_at_precision = 0;
  std::uint64_t checkpoint_bytes = 0;
};

ParamCount param_count(const model::FamiliarityModel& m, unsigned precision = 32);

}  // namespace nbloom::bench
