#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbloom/bench/report.hpp"
#include "nbloom/diff/layers.hpp"
#include "nbloom/error.hpp"
#include "nbloom/filters/sizing.hpp"
#include "nbloom/model/nbf.hpp"
#include "nbloom/tasks/sources.hpp"

using namespace nbloom;
using namespace nbloom::bench;
using diff::Array;
using diff::Var;

namespace {

// Logit of an item is its first coordinate; the state holds `values` zeros.
class ScriptedModel : public model::FamiliarityModel {
 public:
  explicit ScriptedModel(std::size_t values) : FamiliarityModel(model::ModelConfig{}), values_(values) {}
  model::ModelKind kind() const override { return model::ModelKind::nbf; }
  std::unique_ptr<FamiliarityModel> clone() const override { return std::make_unique<ScriptedModel>(*this); }
  Var write_graph(const diff::Bindings& p, std::span<const Item>, model::GraphTrace*) const override {
    return p.tape().constant(Array(diff::Shape{1, values_}));
  }
  Var query_graph(const diff::Bindings& p, Var, std::span<const Item> q, model::GraphTrace*) const override {
    std::vector<double> v;
    for (const auto& item : q) v.push_back(std::get<std::vector<double>>(item)[0]);
    return p.tape().constant(Array::vector(std::move(v)));
  }
  std::size_t state_values(std::size_t) const override { return values_; }

 private:
  std::size_t values_;
};

std::vector<Item> scalar_items(std::vector<double> xs) {
  std::vector<Item> out;
  for (double x : xs) out.emplace_back(std::vector<double>{x});
  return out;
}

std::vector<Item> dense_items(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Item> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    out.emplace_back(std::move(v));
  }
  return out;
}

model::ModelConfig small_nbf() {
  model::ModelConfig c;
  c.encoder.input_dim = 4;
  c.encoder.hidden = 8;
  c.nbf.slots = 5;
  c.nbf.word_size = 2;
  c.nbf.query_dim = 4;
  c.nbf.hidden = 8;
  return c;
}

tasks::TaskSpec uniform_task(std::size_t n) {
  tasks::TaskSpec t;
  t.kind = tasks::TaskKind::uniform;
  t.n = n;
  return t;
}

}  // namespace

TEST_CASE("wilson interval") {
  auto [lo, hi] = wilson_interval(50, 100, 1.959963985);
  CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
  auto [lo0, hi0] = wilson_interval(0, 1000);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  CHECK(hi0 < 0.01);
  auto [lo1, hi1] = wilson_interval(1000, 1000);
  CHECK(hi1 == doctest::Approx(1.0));
  CHECK(lo1 > 0.99);
}

TEST_CASE("constant oracles") {
  const auto data = tasks::synthetic_tokens({2000, 4, 10}, 1);
  const auto source = task_episodes(uniform_task(50), data, 50, 3);
  ConstantOracle yes(true), no(false);
  const auto y = measure_fpr_fnr(yes, source, 2000);
  CHECK(y.fpr.rate == 1.0);
  CHECK(y.fnr.rate == 0.0);
  CHECK(y.queries == 2000);
  const auto n = measure_fpr_fnr(no, source, 2000);
  CHECK(n.fpr.rate == 0.0);
  CHECK(n.fnr.rate == 1.0);
  CHECK_THROWS_AS(measure_fpr_fnr(no, source, 999), ConfigError);
}

TEST_CASE("bloom filter through the harness matches the analytical rate") {
  const auto data = tasks::synthetic_tokens({5000, 4, 10}, 2);
  const std::size_t n = 200;
  for (double eps : {0.01, 0.05}) {
    BloomOracle bloom(eps, 7);
    const auto r = measure_fpr_fnr(bloom, task_episodes(uniform_task(n), data, n, 11), 50000);
    const auto s = filters::bloom_size_for(n, eps);
    const double expected = filters::analytical_fpr(s.m, n, s.k);
    CAPTURE(eps);
    CHECK(r.fnr.errors == 0);
    CHECK(r.fnr.rate == 0.0);
    CHECK(r.fpr.ci_low <= expected);
    CHECK(expected <= r.fpr.ci_high);
    CHECK(r.queries == 50000);
  }
}

TEST_CASE("calibration on separated logits") {
  std::vector<double> neg(10000);
  Rng rng(5);
  for (double& x : neg) x = rng.uniform(-5.0, -1.0);
  const auto c = calibrate_threshold(neg, 1e-5);
  CHECK(c.validation_fpr == 0.0);
  CHECK(c.threshold > *std::max_element(neg.begin(), neg.end()));
  CHECK(c.threshold < 1.0);  // below every positive logit in [1, 5]
  CHECK(std::isfinite(c.threshold));
}

TEST_CASE("calibration at 0.5 lands on the median") {
  std::vector<double> neg(10001);
  Rng rng(6);
  for (double& x : neg) x = rng.normal();
  const auto c = calibrate_threshold(neg, 0.5);
  auto sorted = neg;
  std::nth_element(sorted.begin(), sorted.begin() + 5000, sorted.end());
  CHECK(std::abs(c.threshold - sorted[5000]) < 1e-3);
  CHECK(c.validation_fpr <= 0.5);
  CHECK(c.validation_fpr > 0.49);
}

TEST_CASE("calibration picks the loosest threshold within the target") {
  std::vector<double> neg(10000);
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = static_cast<double>(i);
  const auto c = calibrate_threshold(neg, 0.01);
  // 100 negatives may pass: 9900..9999, so the cut sits between 9899 and 9900.
  CHECK(c.threshold == doctest::Approx(9899.5));
  CHECK(c.validation_fpr == doctest::Approx(0.01));
}

TEST_CASE("calibration errors") {
  std::vector<double> few(9999, 0.0);
  CHECK_THROWS_AS(calibrate_threshold(few, 0.1), DataError);
  std::vector<double> with_nan(10000, 0.0);
  with_nan[3] = std::nan("");
  CHECK_THROWS_AS(calibrate_threshold(with_nan, 0.1), DataError);
  std::vector<double> inf(10000, INFINITY);
  CHECK_THROWS_AS(calibrate_threshold(inf, 0.1), Error);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>(10000, 0.0), 0.0), ConfigError);
}

TEST_CASE("calibrated threshold generalises to fresh negatives") {
  const double eps = 0.05;
  const std::size_t n_cal = 10000, n_fresh = 200000;
  int misses = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(100 + trial);
    std::vector<double> cal(n_cal);
    for (double& x : cal) x = rng.normal();
    const auto c = calibrate_threshold(cal, eps);
    std::size_t fp = 0;
    for (std::size_t i = 0; i < n_fresh; ++i) fp += rng.normal() >= c.threshold;
    const double rate = static_cast<double>(fp) / static_cast<double>(n_fresh);
    // 99% band for a quantile fitted on n_cal draws, widened by the fresh sample.
    const double band = 2.5758 * std::sqrt(eps * (1 - eps) / n_cal) + 2.5758 * std::sqrt(eps * (1 - eps) / n_fresh);
    misses += std::abs(rate - eps) > band;
  }
  CHECK(misses <= 1);
}

TEST_CASE("calibration from a model over episodes") {
  const ScriptedModel m(3);
  std::vector<tasks::Episode> eps(1);
  Rng rng(9);
  for (int i = 0; i < 12000; ++i) {
    const bool positive = i % 6 == 0;
    eps[0].queries.emplace_back(std::vector<double>{positive ? 10.0 : rng.normal()});
    eps[0].labels.push_back(positive);
  }
  eps[0].storage = scalar_items({10.0});
  const auto c = calibrate_threshold(m, eps, 0.1);
  CHECK(c.negatives == 10000);
  CHECK(c.validation_fpr <= 0.1);
  CHECK(c.threshold == doctest::Approx(1.2816).epsilon(0.05));
}

TEST_CASE("composite filter never rejects a stored item") {
  const ScriptedModel m(10);
  const auto stored = scalar_items({-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, -3.0});
  const auto c = build_composite(m, 0.25, stored, 0.01);
  CHECK(c.n_fn == 5);
  CHECK(c.backup.size_bits() == filters::bloom_size_for(5, 0.01).m);
  for (auto v : c.query(stored)) CHECK(v == 1);

  // Zero false negatives: backup sized for one element.
  const auto all = build_composite(m, -100.0, stored, 0.01);
  CHECK(all.n_fn == 0);
  CHECK(all.backup.size_bits() == filters::bloom_size_for(1, 0.01).m);
  CHECK(all.backup.popcount() == 0);

  // Model rejecting everything: the backup is a Bloom filter over the whole set.
  const auto none = build_composite(m, 1e9, stored, 0.01);
  CHECK(none.n_fn == stored.size());
  CHECK(none.backup.size_bits() == filters::bloom_size_for(stored.size(), 0.01).m);
  for (auto v : none.query(stored)) CHECK(v == 1);

  CHECK_THROWS_AS(build_composite(m, 0.0, stored, 0.01, 8), ConfigError);
  CHECK_THROWS_AS(build_composite(m, INFINITY, stored, 0.01), ConfigError);
  CHECK_THROWS_AS(build_composite(m, 0.0, std::vector<Item>{}, 0.01), DataError);
}

TEST_CASE("composite over an untrained neural filter has no false negatives") {
  model::NeuralBloomFilter m(small_nbf(), 3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto stored = dense_items(40, 4, 50 + seed);
    const auto logits = m.logits(stored, stored);
    auto sorted = logits;
    std::sort(sorted.begin(), sorted.end());
    const double tau = sorted[sorted.size() / 2];
    const auto c = build_composite(CalibratedModel{&m, tau, 32}, stored, 0.005, seed);
    CHECK(c.n_fn > 0);
    for (auto v : c.query(stored)) CHECK(v == 1);
  }
}

TEST_CASE("total space accounting") {
  const ScriptedModel m(25);
  std::vector<double> xs(40, 1.0);
  std::fill(xs.begin(), xs.begin() + 10, -1.0);
  const auto stored = scalar_items(xs);
  const double alpha = 0.02;
  const auto c = build_composite(m, 0.0, stored, alpha / 2);
  const auto r = total_space(c, alpha);
  CHECK(r.n_fn == 10);
  CHECK(r.state_bits == 25 * 32);
  CHECK(r.backup_bits == 96);  // ceil(10 * 9.585)
  CHECK(r.total_bits == r.state_bits + r.backup_bits);
  CHECK(1000 + r.backup_bits == 1096);
  CHECK(r.bloom_bits == filters::bloom_size_for(40, alpha).m);
  CHECK(r.cuckoo_bits == filters::cuckoo_size_for(40, alpha).bits());
  CHECK_THROWS_AS(total_space(c, 0.05), ConfigError);

  const auto none = build_composite(m, -10.0, stored, alpha / 2);
  const auto r0 = total_space(none, alpha);
  CHECK(r0.total_bits == 800 + filters::bloom_size_for(1, alpha / 2).m);

  const auto j = r.to_json();
  CHECK(j["total_bits"] == 896);
  CHECK(j["n_fn"] == 10);

  CHECK(filters::bloom_size_for(5000, 0.01).m == 47926);
}

TEST_CASE("space curve rows") {
  const ScriptedModel m(16);
  const std::vector<NeuralArtifact> artifacts{{"scripted", &m}};
  const std::vector<std::size_t> sizes{50, 100};
  CurveOptions o;
  o.alpha = 0.01;
  o.query_budget = 1000;
  o.calibration_negatives = 10000;
  // Scripted logits over strings are not defined, so use a dense universe.
  Rng rng(8);
  std::vector<Item> dense;
  for (int i = 0; i < 3000; ++i) dense.emplace_back(std::vector<double>{rng.normal()});
  const tasks::Dataset universe(tasks::Modality::dense, dense);
  const auto rows = space_curve(artifacts, uniform_task(100), universe, universe, sizes, o);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].model == "bloom");
  CHECK(rows[1].model == "cuckoo");
  CHECK(rows[2].model == "scripted");
  const double slope = (rows[3].total_bits - rows[0].total_bits) / 50.0;
  CHECK(slope == doctest::Approx(9.585).epsilon(0.01));
  for (const auto& r : rows) {
    CAPTURE(r.model);
    CHECK(r.composite_fnr == 0.0);
    CHECK(r.total_bits >= r.state_bits);
  }
  CHECK(rows[2].state_bits == 16 * 32);
  CHECK(rows[2].total_bits == rows[2].state_bits + rows[2].backup_bits);
  CHECK(rows[2].fnr > 0.9);  // random logits at a 0.5% operating point miss most members

  std::ostringstream a, b;
  write_curve_csv(a, rows);
  write_curve_csv(b, space_curve(artifacts, uniform_task(100), universe, universe, sizes, o));
  CHECK(a.str() == b.str());

  const auto ext = extrapolation_curve(artifacts[0], uniform_task(100), universe, universe, sizes, o);
  REQUIRE(ext.size() == 2);
  CHECK(ext[1].total_bits == rows[5].total_bits);
}

TEST_CASE("parameter counts") {
  diff::ParamStore store;
  Rng rng(1);
  diff::init_linear(store, "out", 128, 1, rng);
  CHECK(store.trainable_count() == 129);

  model::NeuralBloomFilter m(small_nbf(), 2);
  const auto before = param_count(m);
  (void)m.write(dense_items(30, 4, 3));
  const auto after = param_count(m);
  CHECK(before.trainable == after.trainable);
  CHECK(before.trainable == m.param_count());
  CHECK(before.bytes_at_precision == before.trainable * 4);
  CHECK(param_count(m, 16).bytes_at_precision == before.trainable * 2);
  CHECK(before.checkpoint_bytes > before.bytes_at_precision);

  auto fixed = small_nbf();
  fixed.nbf.address_mode = model::AddressMode::gaussian_fixed;
  model::NeuralBloomFilter f(fixed, 2);
  const auto pf = param_count(f);
  CHECK(pf.trainable + 5 * 4 == before.trainable);
  CHECK(pf.total >= pf.trainable + 5 * 4);
  CHECK_THROWS_AS(param_count(m, 12), ConfigError);
}

TEST_CASE("timing rows") {
  const auto items = dense_items(10000, 4, 5);
  BloomTimed bloom(10000, 0.01);
  model::NeuralBloomFilter m(small_nbf(), 4);
  ModelTimed nbf(m, "nbf");
  TimingOptions o;
  const auto b = timing_bench(bloom, items, o);
  const auto n = timing_bench(nbf, items, o);
  REQUIRE(b.size() == 4);
  REQUIRE(n.size() == 4);
  for (const auto* rows : {&b, &n}) {
    CHECK((*rows)[0].op == "insert");
    CHECK((*rows)[1].op == "query");
    CHECK((*rows)[2].batch == 10000);
    for (std::size_t op = 0; op < 2; ++op) {
      const auto& single = (*rows)[op];
      const auto& batched = (*rows)[op + 2];
      CAPTURE(batched.artifact);
      CAPTURE(batched.op);
      CHECK(batched.throughput_per_s >= 1000.0 / single.latency_ms);
    }
  }
  CHECK(b[3].latency_ms < n[3].latency_ms);
  o.runs = 4;
  CHECK_THROWS_AS(timing_bench(bloom, items, o), ConfigError);
  o.runs = 5;
  o.batches = {20000};
  CHECK_THROWS_AS(timing_bench(bloom, items, o), ConfigError);
}

TEST_CASE("csv round trip") {
  const std::vector<TimingRow> rows{{"bloom", "query", 1, 0.1, 10000.0, 5}, {"nbf", "insert", 10000, 3.25, 1e6 / 0.3, 5}};
  std::ostringstream out;
  write_timing_csv(out, rows);
  CHECK(out.str().rfind("artifact,op,batch,latency_ms,throughput_per_s\n", 0) == 0);
  std::istringstream in(out.str());
  const auto t = read_csv(in);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "nbf");
  CHECK(t.number(1, "latency_ms") == 3.25);
  CHECK(t.number(1, "throughput_per_s") == 1e6 / 0.3);
  CHECK_THROWS_AS(t.column("missing"), DataError);
  CHECK_THROWS_AS(t.number(0, "artifact"), DataError);
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(read_csv(ragged), DataError);
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
