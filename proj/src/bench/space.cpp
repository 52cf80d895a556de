#include "nbloom/bench/space.hpp"

#include <algorithm>
#include <cmath>

#include "nbloom/error.hpp"
#include "nbloom/filters/sizing.hpp"

namespace nbloom::bench {

void validate_precision(unsigned precision_bits) {
  if (precision_bits != 16 && precision_bits != 32 && precision_bits != 64) {
    throw ConfigError("precision must be 16, 32 or 64 bits, got " + std::to_string(precision_bits));
  }
}

void CalibratedModel::validate() const {
  if (model == nullptr) throw ConfigError("calibrated model: no model");
  if (!std::isfinite(threshold)) throw ConfigError("calibrated model: threshold must be finite");
  validate_precision(precision);
}

std::vector<std::uint8_t> CompositeFilter::query(std::span<const Item> queries) const {
  const auto logits = model->query(state, queries);
  std::vector<std::uint8_t> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[i] = logits[i] >= threshold || backup.query(tasks::item_key(queries[i]));
  }
  return out;
}

std::uint64_t CompositeFilter::state_bits() const {
  return static_cast<std::uint64_t>(model->state_values(stored)) * precision;
}

CompositeFilter build_composite(const model::FamiliarityModel& m, double threshold, std::span<const Item> storage,
                                double delta, unsigned precision, std::uint64_t seed) {
  CalibratedModel{&m, threshold, precision}.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("composite: backup FPR must lie in (0, 1)");
  if (storage.empty()) throw DataError("composite: empty storage set");
  CompositeFilter c;
  c.model = &m;
  c.threshold = threshold;
  c.delta = delta;
  c.precision = precision;
  c.stored = storage.size();
  c.state = m.write(storage);
  const auto logits = m.query(c.state, storage);
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < storage.size(); ++i) {
    if (!(logits[i] >= threshold)) misses.push_back(i);
  }
  c.n_fn = misses.size();
  const auto size = filters::bloom_size_for(std::max<std::size_t>(c.n_fn, 1), delta);
  c.backup = filters::BloomFilter(size.m, size.k, seed);
  for (auto i : misses) c.backup.insert(tasks::item_key(storage[i]));
  for (std::size_t i = 0; i < storage.size(); ++i) {
    if (!(logits[i] >= threshold) && !c.backup.query(tasks::item_key(storage[i]))) {
      throw Error("composite: stored item rejected after backup insertion");
    }
  }
  return c;
}

CompositeFilter build_composite(const CalibratedModel& calibrated, std::span<const Item> storage, double delta,
                                std::uint64_t seed) {
  return build_composite(*calibrated.model, calibrated.threshold, storage, delta, calibrated.precision, seed);
}

nlohmann::json SpaceReport::to_json() const {
  return {{"n", n},
          {"alpha", alpha},
          {"precision", precision},
          {"state_bits", state_bits},
          {"backup_bits", backup_bits},
          {"total_bits", total_bits},
          {"n_fn", n_fn},
          {"measured_fpr", measured_fpr},
          {"fpr_ci", {fpr_ci_low, fpr_ci_high}},
          {"bloom_bits", bloom_bits},
          {"cuckoo_bits", cuckoo_bits}};
}

SpaceReport total_space(const CompositeFilter& composite, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (composite.delta != alpha / 2.0) {
    throw ConfigError("composite backup was built for delta = " + std::to_string(composite.delta) +
                      ", expected alpha / 2 = " + std::to_string(alpha / 2.0));
  }
  SpaceReport r;
  r.n = composite.stored;
  r.alpha = alpha;
  r.precision = composite.precision;
  r.state_bits = composite.state_bits();
  r.backup_bits = composite.backup.size_bits();
  r.total_bits = r.state_bits + r.backup_bits;
  r.n_fn = composite.n_fn;
  r.bloom_bits = filters::bloom_size_for(r.n, alpha).m;
  r.cuckoo_bits = filters::cuckoo_size_for(r.n, alpha).bits();
  return r;
}

void CompositeOracle::build(std::span<const Item> storage) {
  current = build_composite(*model, threshold, storage, delta, precision, builds++);
}

namespace {

CurveRow measure_neural(const NeuralArtifact& a, const tasks::TaskSpec& task, const tasks::Dataset& validation,
                        const tasks::Dataset& test, std::size_t n, const CurveOptions& o) {
  const double eps = o.alpha / 2.0;
  const auto calibration =
      calibrate_threshold(*a.model, task_episodes(task, validation, n, splitmix64(o.seed ^ 0xca11)), eps,
                          o.calibration_negatives);
  CurveRow row;
  row.model = a.name;
  row.n = n;
  row.threshold = calibration.threshold;

  // Per episode: composite over the stored set, model-alone answers for FNR.
  const EpisodeSource episodes = task_episodes(task, test, n, splitmix64(o.seed ^ 0x7e57));
  std::size_t queries = 0, fp = 0, neg = 0, fn = 0, pos = 0, stored = 0, composite_fn = 0;
  double backup_sum = 0.0, total_sum = 0.0;
  while (queries < o.query_budget) {
    const Episode ep = episodes(row.episodes);
    const CompositeFilter c = build_composite(*a.model, calibration.threshold, ep.storage, eps, o.precision, row.episodes);
    ++row.episodes;
    const SpaceReport s = total_space(c, o.alpha);
    row.state_bits = static_cast<double>(s.state_bits);
    backup_sum += static_cast<double>(s.backup_bits);
    total_sum += static_cast<double>(s.total_bits);
    row.max_total_bits = std::max(row.max_total_bits, static_cast<double>(s.total_bits));
    for (auto v : c.query(ep.storage)) composite_fn += !v;
    stored += ep.storage.size();

    const std::size_t take = std::min(ep.queries.size(), o.query_budget - queries);
    const auto q = std::span<const Item>(ep.queries).first(take);
    const auto composite_answers = c.query(q);
    const auto logits = a.model->query(c.state, q);
    for (std::size_t j = 0; j < take; ++j) {
      if (ep.labels[j]) {
        ++pos;
        fn += !(logits[j] >= calibration.threshold);
      } else {
        ++neg;
        fp += composite_answers[j];
      }
    }
    queries += take;
  }
  const auto episodes_d = static_cast<double>(row.episodes);
  row.backup_bits = backup_sum / episodes_d;
  row.total_bits = total_sum / episodes_d;
  row.fpr = neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0;
  row.fnr = pos ? static_cast<double>(fn) / static_cast<double>(pos) : 0.0;
  row.composite_fnr = static_cast<double>(composite_fn) / static_cast<double>(stored);
  return row;
}

CurveRow measure_classical(SetOracle& oracle, std::uint64_t bits, const tasks::TaskSpec& task,
                           const tasks::Dataset& test, std::size_t n, const CurveOptions& o) {
  const auto rates = measure_fpr_fnr(oracle, task_episodes(task, test, n, splitmix64(o.seed ^ 0x7e57)), o.query_budget);
  CurveRow row;
  row.model = oracle.name();
  row.n = n;
  row.state_bits = static_cast<double>(bits);
  row.total_bits = row.state_bits;
  row.max_total_bits = row.state_bits;
  row.fpr = rates.fpr.rate;
  row.fnr = rates.fnr.rate;
  row.episodes = rates.episodes;
  return row;
}

}  // namespace

std::vector<CurveRow> space_curve(std::span<const NeuralArtifact> artifacts, const tasks::TaskSpec& task,
                                  const tasks::Dataset& validation, const tasks::Dataset& test,
                                  std::span<const std::size_t> sizes, const CurveOptions& options) {
  validate_precision(options.precision);
  std::vector<CurveRow> rows;
  for (std::size_t n : sizes) {
    if (options.classical) {
      BloomOracle bloom(options.alpha, options.seed);
      rows.push_back(measure_classical(bloom, filters::bloom_size_for(n, options.alpha).m, task, test, n, options));
      CuckooOracle cuckoo(options.alpha, options.seed);
      rows.push_back(measure_classical(cuckoo, filters::cuckoo_size_for(n, options.alpha).bits(), task, test, n, options));
    }
    for (const auto& a : artifacts) rows.push_back(measure_neural(a, task, validation, test, n, options));
  }
  return rows;
}

std::vector<CurveRow> extrapolation_curve(const NeuralArtifact& artifact, const tasks::TaskSpec& task,
                                          const tasks::Dataset& validation, const tasks::Dataset& test,
                                          std::span<const std::size_t> sizes, const CurveOptions& options) {
  validate_precision(options.precision);
  std::vector<CurveRow> rows;
  for (std::size_t n : sizes) rows.push_back(measure_neural(artifact, task, validation, test, n, options));
  return rows;
}

ParamCount param_count(const model::FamiliarityModel& m, unsigned precision) {
  validate_precision(precision);
  ParamCount c;
  c.trainable = m.params().trainable_count();
  c.total = m.params().total_count();
  c.bytes_at_precision = static_cast<std::uint64_t>(c.trainable) * precision / 8;
  c.checkpoint_bytes = m.params().serialize().size();
  return c;
}

}  // namespace nbloom::bench
