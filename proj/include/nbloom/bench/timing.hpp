#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nbloom/filters/bloom.hpp"
#include "nbloom/filters/cuckoo.hpp"
#include "nbloom/model/familiarity.hpp"

namespace nbloom::bench {

// Something whose insert and query paths can be timed on a batch of items.
class TimedArtifact {
 public:
  virtual ~TimedArtifact() = default;
  virtual std::string name() const = 0;
  // Starts from an empty structure and inserts the whole batch.
  virtual void insert(std::span<const tasks::Item> items) = 0;
  // Queries against whatever the last insert stored.
  virtual std::size_t query(std::span<const tasks::Item> items) = 0;
};

class BloomTimed : public TimedArtifact {
 public:
  BloomTimed(std::size_t capacity, double epsilon, std::uint64_t seed = 0);
  std::string name() const override { return "bloom"; }
  void insert(std::span<const tasks::Item> items) override;
  std::size_t query(std::span<const tasks::Item> items) override;

 private:
  filters::BloomFilter empty_;
  filters::BloomFilter filter_;
};

class CuckooTimed : public TimedArtifact {
 public:
  CuckooTimed(std::size_t capacity, double epsilon, std::uint64_t seed = 0);
  std::string name() const override { return "cuckoo"; }
  void insert(std::span<const tasks::Item> items) override;
  std::size_t query(std::span<const tasks::Item> items) override;

 private:
  std::size_t capacity_;
  double epsilon_;
  std::uint64_t seed_;
  std::unique_ptr<filters::CuckooFilter> filter_;
};

class ModelTimed : public TimedArtifact {
 public:
  ModelTimed(const model::FamiliarityModel& m, std::string name) : model_(&m), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  void insert(std::span<const tasks::Item> items) override { state_ = model_->write(items); }
  std::size_t query(std::span<const tasks::Item> items) override;

 private:
  const model::FamiliarityModel* model_;
  std::string name_;
  diff::Array state_;
};

struct TimingRow {
  std::string artifact;
  std::string op;  // insert or query
  std::size_t batch = 0;
  double latency_ms = 0.0;  // median wall time for the whole batch
  double throughput_per_s = 0.0;
  std::size_t runs = 0;
};

struct TimingOptions {
  std::vector<std::size_t> batches{1, 10000};
  std::size_t runs = 5;
  std::size_t warmup = 1;
};

// Times insert and query for every batch size; `items` must hold at least the
// largest batch. Query runs use the state produced by an insert of the same batch.
std::vector<TimingRow> timing_bench(TimedArtifact& artifact, std::span<const tasks::Item> items,
                                    const TimingOptions& options = {});

}  // namespace nbloom::bench
