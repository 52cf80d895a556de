#include "nbloom/bench/timing.hpp"

#include <algorithm>
#include <chrono>

#include "nbloom/error.hpp"

namespace nbloom::bench {

BloomTimed::BloomTimed(std::size_t capacity, double epsilon, std::uint64_t seed)
    : empty_(filters::BloomFilter::for_capacity(std::max<std::size_t>(capacity, 1), epsilon, seed)), filter_(empty_) {}

void BloomTimed::insert(std::span<const tasks::Item> items) {
  filter_ = empty_;
  for (const auto& item : items) filter_.insert(tasks::item_key(item));
}

std::size_t BloomTimed::query(std::span<const tasks::Item> items) {
  std::size_t hits = 0;
  for (const auto& item : items) hits += filter_.query(tasks::item_key(item));
  return hits;
}

CuckooTimed::CuckooTimed(std::size_t capacity, double epsilon, std::uint64_t seed)
    : capacity_(std::max<std::size_t>(capacity, 1)), epsilon_(epsilon), seed_(seed) {}

void CuckooTimed::insert(std::span<const tasks::Item> items) {
  filter_ = std::make_unique<filters::CuckooFilter>(filters::CuckooFilter::for_capacity(capacity_, epsilon_, seed_));
  for (const auto& item : items) {
    if (!filter_->insert(tasks::item_key(item))) throw Error("cuckoo timing: insert failed, filter full");
  }
}

std::size_t CuckooTimed::query(std::span<const tasks::Item> items) {
  if (!filter_) throw Error("cuckoo timing: query before insert");
  std::size_t hits = 0;
  for (const auto& item : items) hits += filter_->query(tasks::item_key(item));
  return hits;
}

std::size_t ModelTimed::query(std::span<const tasks::Item> items) {
  std::size_t hits = 0;
  for (double l : model_->query(state_, items)) hits += l >= 0.0;
  return hits;
}

namespace {

template <class F>
double median_ms(F&& f, std::size_t runs, std::size_t warmup) {
  for (std::size_t i = 0; i < warmup; ++i) f();
  std::vector<double> ms;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(ms.begin(), ms.end());
  return runs % 2 ? ms[runs / 2] : 0.5 * (ms[runs / 2 - 1] + ms[runs / 2]);
}

}  // namespace

std::vector<TimingRow> timing_bench(TimedArtifact& artifact, std::span<const tasks::Item> items,
                                    const TimingOptions& options) {
  if (options.runs < 5) throw ConfigError("timing needs at least 5 measured runs");
  if (options.warmup < 1) throw ConfigError("timing needs at least one warm-up run");
  std::vector<TimingRow> rows;
  volatile std::size_t sink = 0;
  for (std::size_t batch : options.batches) {
    if (batch == 0 || batch > items.size()) {
      throw ConfigError("timing batch " + std::to_string(batch) + " needs 1.." + std::to_string(items.size()) +
                        " items");
    }
    const auto slice = items.first(batch);
    const double insert_ms = median_ms([&] { artifact.insert(slice); }, options.runs, options.warmup);
    artifact.insert(slice);
    const double query_ms = median_ms([&] { sink = sink + artifact.query(slice); }, options.runs, options.warmup);
    for (auto [op, ms] : {std::pair<const char*, double>{"insert", insert_ms}, {"query", query_ms}}) {
      TimingRow row;
      row.artifact = artifact.name();
      row.op = op;
      row.batch = batch;
      row.latency_ms = ms;
      row.throughput_per_s = static_cast<double>(batch) * 1000.0 / std::max(ms, 1e-9);
      row.runs = options.runs;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace nbloom::bench
