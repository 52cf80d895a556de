#include "nbloom/bench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nbloom/error.hpp"

namespace nbloom::bench {

void BloomOracle::build(std::span<const Item> storage) {
  filter_ = filters::BloomFilter::for_capacity(std::max<std::size_t>(storage.size(), 1), epsilon_, seed_);
  for (const auto& it : storage) filter_.insert(tasks::item_key(it));
}

std::vector<std::uint8_t> BloomOracle::query(std::span<const Item> queries) const {
  std::vector<std::uint8_t> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(filter_.query(tasks::item_key(q)));
  return out;
}

void CuckooOracle::build(std::span<const Item> storage) {
  filter_ = std::make_unique<filters::CuckooFilter>(
      filters::CuckooFilter::for_capacity(std::max<std::size_t>(storage.size(), 1), epsilon_, seed_));
  for (const auto& it : storage) {
    if (!filter_->insert(tasks::item_key(it))) throw Error("cuckoo filter rejected an insert at design load");
  }
}

std::vector<std::uint8_t> CuckooOracle::query(std::span<const Item> queries) const {
  if (!filter_) throw Error("cuckoo oracle queried before build");
  std::vector<std::uint8_t> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(filter_->query(tasks::item_key(q)));
  return out;
}

std::vector<std::uint8_t> ModelOracle::query(std::span<const Item> queries) const {
  const auto logits = model_->query(state_, queries);
  std::vector<std::uint8_t> out;
  out.reserve(logits.size());
  for (double l : logits) out.push_back(l >= threshold_);
  return out;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

RateEstimate estimate(std::size_t errors, std::size_t trials) {
  RateEstimate r;
  r.errors = errors;
  r.trials = trials;
  r.rate = trials ? static_cast<double>(errors) / static_cast<double>(trials) : 0.0;
  std::tie(r.ci_low, r.ci_high) = wilson_interval(errors, trials);
  return r;
}

}  // namespace

MeasuredRates measure_fpr_fnr(SetOracle& oracle, const EpisodeSource& episodes, std::size_t query_budget) {
  if (query_budget < 1000) throw ConfigError("query budget must be at least 1000");
  std::size_t fp = 0, neg = 0, fn = 0, pos = 0;
  MeasuredRates out;
  while (out.queries < query_budget) {
    const Episode ep = episodes(out.episodes++);
    if (ep.queries.empty()) throw DataError("episode without queries");
    oracle.build(ep.storage);
    const std::size_t take = std::min(ep.queries.size(), query_budget - out.queries);
    const auto answers = oracle.query(std::span<const Item>(ep.queries).first(take));
    for (std::size_t j = 0; j < take; ++j) {
      if (ep.labels[j]) {
        ++pos;
        fn += !answers[j];
      } else {
        ++neg;
        fp += answers[j];
      }
    }
    out.queries += take;
  }
  out.fpr = estimate(fp, neg);
  out.fnr = estimate(fn, pos);
  return out;
}

EpisodeSource task_episodes(const tasks::TaskSpec& task, const tasks::Dataset& data, std::size_t n, std::uint64_t seed) {
  tasks::TaskSpec spec = task;
  spec.n = n;
  spec.n_min = 0;
  spec.validate();
  const Rng root(seed);
  return [spec, &data, root](std::size_t index) {
    Rng r = root.split(index);
    return tasks::sample_episode(spec, data, r, spec.n);
  };
}

Calibration calibrate_threshold(std::span<const double> negative_logits, double epsilon, std::size_t min_negatives) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("calibration target must lie in (0, 1)");
  if (negative_logits.size() < min_negatives) {
    throw DataError("calibration needs at least " + std::to_string(min_negatives) + " negative queries, got " +
                    std::to_string(negative_logits.size()));
  }
  std::vector<double> v(negative_logits.begin(), negative_logits.end());
  for (double x : v) {
    if (std::isnan(x)) throw DataError("calibration: NaN logit");
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  const std::size_t n = v.size();
  const auto k = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n)));
  Calibration c;
  c.negatives = n;
  if (k >= n) {
    c.threshold = -std::numeric_limits<double>::infinity();
  } else {
    const double below = v[k];  // must be rejected
    if (std::isinf(below) && below > 0) throw Error("calibration: target FPR unattainable, logits saturate at +inf");
    const double above = k > 0 ? v[k - 1] : below;
    c.threshold = above > below && std::isfinite(above) ? 0.5 * (above + below) : std::nextafter(below, INFINITY);
  }
  std::size_t fp = 0;
  for (double x : v) fp += x >= c.threshold;
  c.validation_fpr = static_cast<double>(fp) / static_cast<double>(n);
  return c;
}

Calibration calibrate_threshold(const model::FamiliarityModel& m, std::span<const Episode> validation, double epsilon,
                                std::size_t min_negatives) {
  std::vector<double> negatives;
  for (const auto& ep : validation) {
    const auto logits = m.logits(ep.storage, ep.queries);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      if (!ep.labels[j]) negatives.push_back(logits[j]);
    }
  }
  return calibrate_threshold(negatives, epsilon, min_negatives);
}

Calibration calibrate_threshold(const model::FamiliarityModel& m, const EpisodeSource& source, double epsilon,
                                std::size_t min_negatives) {
  std::vector<double> negatives;
  std::size_t empty_streak = 0;
  for (std::size_t i = 0; negatives.size() < min_negatives; ++i) {
    const Episode ep = source(i);
    const auto logits = m.logits(ep.storage, ep.queries);
    const std::size_t before = negatives.size();
    for (std::size_t j = 0; j < logits.size(); ++j) {
      if (!ep.labels[j]) negatives.push_back(logits[j]);
    }
    empty_streak = negatives.size() == before ? empty_streak + 1 : 0;
    if (empty_streak > 1000) throw DataError("calibration: task produces no negative queries");
  }
  return calibrate_threshold(negatives, epsilon, min_negatives);
}

}  // namespace nbloom::bench
