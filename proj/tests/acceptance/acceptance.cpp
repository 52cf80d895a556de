// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nbloom/bench/report.hpp"
#include "nbloom/cli/commands.hpp"
#include "nbloom/diff/gradcheck.hpp"
#include "nbloom/diff/layers.hpp"
#include "nbloom/diff/lstm.hpp"
#include "nbloom/diff/ops.hpp"
#include "nbloom/filters/bloom.hpp"
#include "nbloom/filters/cuckoo.hpp"
#include "nbloom/filters/sizing.hpp"
#include "nbloom/model/nbf.hpp"
#include "nbloom/tasks/sources.hpp"
#include "nbloom/train/trainer.hpp"

using namespace nbloom;
using diff::Array;
using diff::Tape;
using diff::Var;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::string> distinct_keys(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  std::vector<std::string> keys;
  keys.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) keys.push_back(prefix + std::to_string(i) + ":" + std::to_string(rng.next_u64()));
  return keys;
}

std::vector<tasks::Item> dense_items(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<tasks::Item> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    out.emplace_back(std::move(v));
  }
  return out;
}

Array random_array(diff::Shape shape, Rng& rng) {
  Array a(std::move(shape));
  for (double& v : a.values()) v = rng.uniform(-1.0, 1.0);
  return a;
}

Var weighted_sum(Var y, std::uint64_t seed) {
  Rng rng(seed);
  Array w = random_array(y.shape(), rng);
  return diff::reduce_sum(diff::multiply(y, y.tape().constant(w)));
}

model::ModelConfig cluster_nbf(std::size_t slots, std::size_t hidden, std::size_t k_addr = 0, bool sphering = false) {
  model::ModelConfig c;
  c.encoder.input_dim = 16;
  c.encoder.hidden = hidden;
  c.nbf.slots = slots;
  c.nbf.word_size = 2;
  c.nbf.hidden = hidden;
  c.nbf.query_dim = 16;
  c.nbf.k_addr = k_addr;
  c.nbf.sphering = sphering;
  return c;
}

// 10 clusters of 500 points in 16 dimensions; test, validation and training
// classes share the clusters but not the points.
struct ClusterSplits {
  tasks::Dataset train, validation, test;
};

ClusterSplits cluster_splits() {
  const auto data = tasks::synthetic_clusters({10, 16, 500, 0.1}, 1);
  auto outer = tasks::split_dataset(data, 0.2, 2);
  auto inner = tasks::split_dataset(outer.train, 0.2, 3);
  return {std::move(inner.train), std::move(inner.test), std::move(outer.test)};
}

// Smallest gap between the k-th and (k+1)-th address score over an episode.
double topk_margin(const model::NeuralBloomFilter& m, const tasks::Episode& ep, std::size_t k) {
  Tape tape;
  diff::Bindings p(tape, m.params());
  const Array& keys = m.params().get("address/keys");
  double margin = INFINITY;
  for (const auto* items : {&ep.storage, &ep.queries}) {
    const Array q = m.controller_graph(p, *items).q.value();
    for (std::size_t r = 0; r < q.shape()[0]; ++r) {
      std::vector<double> scores(keys.shape()[0], 0.0);
      for (std::size_t s = 0; s < scores.size(); ++s) {
        for (std::size_t j = 0; j < q.shape()[1]; ++j) scores[s] += q.at(r, j) * keys.at(s, j);
      }
      std::sort(scores.begin(), scores.end(), std::greater<>());
      margin = std::min(margin, scores[k - 1] - scores[k]);
    }
  }
  return margin;
}

// True when central differences at steps 1e-5 and 1e-6 agree on every
// probed coordinate, i.e. no leaky-relu or top-k switch lies within reach of
// the probe. Uses no analytic gradients.
bool smooth_at(const diff::ParamGraph& loss, const diff::ParamStore& params) {
  auto evaluate = [&](const diff::ParamStore& store) {
    Tape tape;
    diff::Bindings b(tape, store);
    return loss(b).value().item();
  };
  diff::ParamStore probe = params;
  for (const auto& [name, values] : params.arrays()) {
    if (!diff::ParamStore::is_trainable_name(name)) continue;
    Array& a = probe.get(name);
    const std::size_t stride = std::max<std::size_t>(1, a.size() / 64);
    for (std::size_t i = 0; i < a.size(); i += stride) {
      double slope[2];
      for (int j = 0; j < 2; ++j) {
        const double eps = j == 0 ? 1e-5 : 1e-6;
        const double x0 = a[i];
        a[i] = x0 + eps;
        const double up = evaluate(probe);
        a[i] = x0 - eps;
        const double down = evaluate(probe);
        a[i] = x0;
        slope[j] = (up - down) / (2.0 * eps);
      }
      if (std::abs(slope[0] - slope[1]) > 1e-5 * (std::abs(slope[1]) + 1e-3)) return false;
    }
  }
  return true;
}

// 1. Sizing formulas.
Outcome sizing() {
  const double eps[] = {0.05, 0.01, 0.001};
  const double table[] = {31.2, 47.9, 71.9};
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const double kb = static_cast<double>(filters::bloom_size_for(5000, eps[i]).m) / 1000.0;
    ok = ok && std::abs(kb - table[i]) / table[i] < 0.01;
    detail += fmt("%.2fkb ", kb);
  }
  const double bound = filters::optimal_space_bound(1000, 0.01);
  ok = ok && std::llround(bound) == 6644 && std::abs(bound - 6643.856) < 1e-3;
  detail += "bound=" + fmt("%.3f", bound);
  return {ok, detail};
}

// 2. Classical filters: zero false negatives and the analytical Bloom rate.
Outcome filter_correctness() {
  const std::uint64_t n = 5000;
  const double eps = 0.01;
  const auto size = filters::bloom_size_for(n, eps);
  std::size_t fn = 0, within = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto keys = distinct_keys(n, 1000 + trial, "member");
    filters::BloomFilter bloom(size.m, size.k, trial);
    auto cuckoo = filters::CuckooFilter::for_capacity(n, eps, trial);
    for (const auto& k : keys) {
      bloom.insert(k);
      if (!cuckoo.insert(k)) ++fn;
    }
    for (const auto& k : keys) fn += !bloom.query(k) + !cuckoo.query(k);
    std::size_t fp = 0;
    for (const auto& q : distinct_keys(50000, 5000 + trial, "absent")) fp += bloom.query(q);
    const double gap = std::abs(static_cast<double>(fp) / 50000.0 - filters::analytical_fpr(size.m, n, size.k));
    worst = std::max(worst, gap);
    within += gap <= 0.003;
  }
  return {fn == 0 && within >= 95, "false_negatives=" + std::to_string(fn) + " trials_within_0.3pp=" +
                                       std::to_string(within) + "/100 worst_gap=" + fmt("%.5f", worst)};
}

// 3. Finite-difference checks for every primitive, the LSTM cell and the
// full episode loss.
Outcome gradients() {
  using diff::Primitive;
  Rng rng(2024);
  const Array other = random_array({4, 5}, rng);
  const Array mat_b = random_array({5, 3}, rng);
  const Array row = random_array({5}, rng);
  const Array word = random_array({5, 2}, rng);
  const Array labels = Array::matrix(4, 5, std::vector<double>(20, 1.0));
  struct Case {
    Primitive op;
    diff::ScalarGraph graph;
    diff::Shape shape;
  };
  const std::vector<Case> cases = {
      {Primitive::matmul, [&](Tape& t, Var x) { return weighted_sum(diff::matmul(x, t.constant(mat_b)), 1); }, {4, 5}},
      {Primitive::matmul,
       [&](Tape& t, Var x) { return weighted_sum(diff::matmul(x, t.constant(other), true, false), 2); },
       {4, 2}},
      {Primitive::matmul,
       [&](Tape& t, Var x) { return weighted_sum(diff::matmul(t.constant(other), x, false, true), 3); },
       {3, 5}},
      {Primitive::add, [&](Tape& t, Var x) { return weighted_sum(diff::add(t.constant(other), x), 4); }, {5}},
      {Primitive::multiply,
       [&](Tape& t, Var x) { return weighted_sum(diff::multiply(diff::flatten(x, {4, 5, 1}), t.constant(word)), 5); },
       {4, 5}},
      {Primitive::concat, [&](Tape& t, Var x) { return weighted_sum(diff::concat({t.constant(other), x}), 6); }, {4, 2}},
      {Primitive::leaky_relu, [](Tape&, Var x) { return weighted_sum(diff::leaky_relu(x), 7); }, {4, 5}},
      {Primitive::sigmoid, [](Tape&, Var x) { return weighted_sum(diff::sigmoid(x), 8); }, {4, 5}},
      {Primitive::tanh, [](Tape&, Var x) { return weighted_sum(diff::tanh(x), 9); }, {4, 5}},
      {Primitive::softmax, [](Tape&, Var x) { return weighted_sum(diff::softmax(x), 10); }, {4, 5}},
      {Primitive::topk_softmax, [](Tape&, Var x) { return weighted_sum(diff::topk_softmax(x, 2), 11); }, {4, 5}},
      {Primitive::layer_norm,
       [&](Tape& t, Var x) { return weighted_sum(diff::layer_norm(x, t.constant(row), t.constant(row)), 12); },
       {4, 5}},
      {Primitive::layer_norm,
       [&](Tape& t, Var x) { return weighted_sum(diff::layer_norm(t.constant(other), x, x), 13); },
       {5}},
      {Primitive::outer_product,
       [&](Tape& t, Var x) { return weighted_sum(diff::outer_product(x, t.constant(row)), 14); },
       {3}},
      {Primitive::flatten, [](Tape&, Var x) { return weighted_sum(diff::flatten(x), 15); }, {2, 3, 2}},
      {Primitive::reduce_sum, [](Tape&, Var x) { return diff::reduce_sum(diff::multiply(x, x)); }, {4, 5}},
      {Primitive::bce_loss, [&](Tape& t, Var x) { return diff::bce_loss(x, t.constant(labels)); }, {4, 5}},
      {Primitive::l2_normalize, [](Tape&, Var x) { return weighted_sum(diff::l2_normalize(x), 16); }, {4, 5}},
      {Primitive::reduce_max, [](Tape&, Var x) { return weighted_sum(diff::reduce_max(x), 17); }, {4, 5}},
      {Primitive::select_rows, [](Tape&, Var x) { return weighted_sum(diff::select_rows(x, {2, 0, 2}), 18); }, {4, 5}},
  };
  double worst = 0.0;
  std::set<Primitive> covered;
  for (const auto& c : cases) {
    worst = std::max(worst, diff::finite_diff_check(c.graph, random_array(c.shape, rng)).max_relative_error);
    covered.insert(c.op);
  }
  const std::size_t primitives = static_cast<std::size_t>(Primitive::select_rows);  // excluding leaf
  const bool all_covered = covered.size() == primitives;

  diff::ParamStore cell;
  diff::init_lstm(cell, "cell", 3, 4, rng);
  const Array xs = random_array({3, 3}, rng);
  const double lstm_err =
      diff::param_finite_diff_check(
          [&](const diff::Bindings& p) {
            auto state = diff::lstm_zero_state(p.tape(), 1, 4);
            for (std::size_t s = 0; s < 3; ++s) {
              state = diff::lstm_cell(p, "cell", diff::select_rows(p.tape().constant(xs), {s}), state);
            }
            return weighted_sum(diff::concat({state.h, state.c}), 19);
          },
          cell)
          .max_relative_error;

  const auto data = tasks::synthetic_clusters({4, 16, 20, 0.1}, 3);
  tasks::TaskSpec task;
  task.n = 5;
  double nbf_err = 0.0;
  for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
    for (bool sphering : {false, true}) {
      auto cfg = cluster_nbf(6, 8, k, sphering);
      cfg.nbf.query_dim = 4;
      model::NeuralBloomFilter m(cfg, 11);
      if (sphering) {
        auto z = m.zca();
        for (std::size_t i = 0; i < z.theta.size(); ++i) z.theta[i] += 0.1 * std::sin(static_cast<double>(i));
        for (std::size_t i = 0; i < z.center.size(); ++i) z.center[i] = 0.05 * std::cos(static_cast<double>(i));
        m.set_zca(z);
      }
      // Finite differences are only meaningful away from a top-k switch.
      Rng erng(12 + k);
      auto ep = tasks::sample_episode(task, data, erng);
      auto loss = [&](const diff::Bindings& p) { return train::episode_loss(m, p, ep).loss; };
      while ((k != 0 && topk_margin(m, ep, k) < 1e-3) || !smooth_at(loss, m.params())) {
        ep = tasks::sample_episode(task, data, erng);
      }
      nbf_err = std::max(nbf_err, diff::param_finite_diff_check(loss, m.params()).max_relative_error);
    }
  }
  const bool ok = all_covered && worst < 1e-4 && lstm_err < 1e-4 && nbf_err < 1e-4;
  return {ok, "primitives=" + std::to_string(covered.size()) + "/" + std::to_string(primitives) +
                  " primitive_err=" + fmt("%.2e", worst) + " lstm_err=" + fmt("%.2e", lstm_err) +
                  " episode_loss_err=" + fmt("%.2e", nbf_err)};
}

// 4. Write order does not matter and write-word gradients need no unroll.
Outcome order_invariance() {
  double worst_logit = 0.0, worst_grad = 0.0;
  for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
    model::NeuralBloomFilter m(cluster_nbf(10, 32, k, k != 0), 21);
    auto storage = dense_items(60, 16, 22);
    const auto queries = dense_items(40, 16, 23);
    const auto reference = m.read(m.write(m.empty_memory(), storage), queries);
    Rng rng(24);
    for (int trial = 0; trial < 20; ++trial) {
      rng.shuffle(storage);
      auto state = m.empty_memory();
      for (const auto& item : storage) state = m.write(state, std::span<const tasks::Item>(&item, 1));
      const auto logits = m.read(state, queries);
      for (std::size_t i = 0; i < logits.size(); ++i) worst_logit = std::max(worst_logit, std::abs(logits[i] - reference[i]));
    }

    std::vector<double> labels(queries.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);
    Tape tape;
    diff::Bindings p(tape, m.params());
    const auto c = m.controller_graph(p, storage);
    Var mem = m.write_memory(c);
    Var loss = diff::bce_loss(m.query_graph(p, mem, queries), tape.constant(Array::vector(labels)));
    tape.backward(loss);
    const Array& dm = mem.grad();
    const Array& a = c.a.value();
    const Array& dw = c.w.grad();
    for (std::size_t i = 0; i < storage.size(); ++i) {
      for (std::size_t j = 0; j < dm.shape()[1]; ++j) {
        double closed = 0.0;
        for (std::size_t s = 0; s < dm.shape()[0]; ++s) closed += dm.at(s, j) * a.at(i, s);
        worst_grad = std::max(worst_grad, std::abs(closed - dw.at(i, j)) / (std::abs(dw.at(i, j)) + 1e-12));
      }
    }
  }
  return {worst_logit < 1e-6 && worst_grad < 1e-6,
          "max_logit_change=" + fmt("%.2e", worst_logit) + " write_grad_rel_err=" + fmt("%.2e", worst_grad)};
}

// 5. Composite filters never drop a stored item and their space adds up.
Outcome composite_guarantee() {
  const auto splits = cluster_splits();
  tasks::TaskSpec task;
  task.n = 50;
  const double alpha = 0.02;

  std::vector<std::pair<std::string, std::unique_ptr<model::FamiliarityModel>>> models;
  for (auto kind : {model::ModelKind::nbf, model::ModelKind::lstm, model::ModelKind::memnet}) {
    auto cfg = cluster_nbf(8, 32);
    cfg.kind = kind;
    models.emplace_back("untrained_" + model::to_string(kind), model::make_model(cfg, 31));
  }
  train::TrainConfig tc;
  tc.model = cluster_nbf(8, 32);
  tc.task = task;
  tc.max_steps = 300;
  tc.eval_period = 300;
  tc.eval_episodes = 10;
  auto trained = train::train(tc, splits.train, splits.validation);
  models.emplace_back("trained_nbf", std::move(trained.model));

  std::size_t misses = 0, arithmetic_errors = 0, composites = 0, total_fn = 0;
  for (const auto& [name, m] : models) {
    const auto cal = bench::calibrate_threshold(*m, bench::task_episodes(task, splits.validation, 50, 41), alpha / 2);
    const bench::CalibratedModel calibrated{m.get(), cal.threshold, 32};
    Rng rng(42);
    for (int e = 0; e < 20; ++e) {
      const auto ep = tasks::sample_episode(task, splits.test, rng);
      const auto c = bench::build_composite(calibrated, ep.storage, alpha / 2, static_cast<std::uint64_t>(e));
      for (auto v : c.query(ep.storage)) misses += v != 1;
      const auto r = bench::total_space(c, alpha);
      const double per_item = std::log2(2.0 / alpha) * std::log2(std::exp(1.0));
      const auto backup = static_cast<std::uint64_t>(std::ceil(static_cast<double>(std::max<std::size_t>(c.n_fn, 1)) * per_item));
      const auto state = static_cast<std::uint64_t>(m->state_values(ep.storage.size())) * 32;
      arithmetic_errors += r.backup_bits != backup || r.state_bits != state || r.total_bits != state + backup;
      total_fn += c.n_fn;
      ++composites;
    }
  }
  return {misses == 0 && arithmetic_errors == 0,
          "composites=" + std::to_string(composites) + " composite_false_negatives=" + std::to_string(misses) +
              " model_false_negatives=" + std::to_string(total_fn) +
              " arithmetic_mismatches=" + std::to_string(arithmetic_errors)};
}

// 6. A trained filter beats the Bloom filter's size on the class task.
Outcome class_task_space() {
  const auto splits = cluster_splits();
  train::TrainConfig c;
  c.model = cluster_nbf(4, 64);
  c.task.n = 50;
  c.task.t = 50;
  c.max_steps = 3000;
  c.eval_period = 500;
  c.eval_episodes = 40;
  const auto r = train::train(c, splits.train, splits.validation);
  bench::CurveOptions o;
  o.alpha = 0.01;
  const bench::NeuralArtifact a{"nbf", r.model.get()};
  const std::vector<std::size_t> sizes{50};
  const auto rows = bench::space_curve(std::span(&a, 1), c.task, splits.validation, splits.test, sizes, o);
  double bloom = 0.0, nbf = 0.0, composite_fnr = 1.0, fpr = 0.0;
  for (const auto& row : rows) {
    if (row.model == "bloom") bloom = row.total_bits;
    if (row.model == "nbf") {
      nbf = row.total_bits;
      composite_fnr = row.composite_fnr;
      fpr = row.fpr;
    }
  }
  return {bloom > 0.0 && nbf <= 0.7 * bloom && composite_fnr == 0.0,
          "nbf_total_bits=" + fmt("%.1f", nbf) + " bloom_bits=" + fmt("%.0f", bloom) + " ratio=" +
              fmt("%.3f", nbf / bloom) + " fpr=" + fmt("%.4f", fpr) + " steps=" + std::to_string(r.steps)};
}

// 7. Extrapolation beyond the training set sizes on the database task.
Outcome extrapolation() {
  // Independent sorted universes of equal density for training, calibration
  // and test.
  const auto train_keys = tasks::synthetic_tokens({5000, 4, 12}, 1);
  const auto test_keys = tasks::synthetic_tokens({5000, 4, 12}, 2);
  const auto validation_keys = tasks::synthetic_tokens({5000, 4, 12}, 3);
  train::TrainConfig c;
  c.model.encoder.kind = model::EncoderKind::trigram;
  c.model.encoder.hidden = 64;
  c.model.nbf.slots = 16;
  c.model.nbf.word_size = 2;
  c.model.nbf.hidden = 64;
  c.model.nbf.query_dim = 16;
  c.task.kind = tasks::TaskKind::database_range;
  c.task.n = 100;
  c.task.n_min = 2;
  c.task.positive_fraction = 0.5;
  c.learning_rate = 3e-3;
  c.max_steps = 3000;
  c.eval_period = 500;
  c.eval_episodes = 40;
  const auto r = train::train(c, train_keys, validation_keys);
  bench::CurveOptions o;
  o.alpha = 0.05;
  o.classical = false;
  const bench::NeuralArtifact a{"nbf", r.model.get()};
  const std::vector<std::size_t> sizes{50, 100, 125};
  const auto rows = bench::extrapolation_curve(a, c.task, validation_keys, test_keys, sizes, o);
  double composite = 0.0;
  std::string detail;
  for (const auto& row : rows) {
    composite = std::max(composite, row.composite_fnr);
    detail += "fnr@" + std::to_string(row.n) + "=" + fmt("%.4f", row.fnr) + " ";
  }
  const double fnr100 = rows[1].fnr, fnr125 = rows[2].fnr;
  return {fnr125 <= 3.0 * fnr100 && composite == 0.0,
          detail + "ratio=" + fmt("%.3f", fnr100 > 0 ? fnr125 / fnr100 : 0.0) + " composite_fnr=" +
              fmt("%.1f", composite)};
}

// 8. Sphering spreads sparse addresses over more slots.
Outcome sphering_ablation() {
  const auto splits = cluster_splits();
  double util[2] = {0.0, 0.0};
  for (bool sphering : {false, true}) {
    train::TrainConfig c;
    c.model = cluster_nbf(32, 64, 3, sphering);
    c.task.n = 50;
    c.max_steps = 1000;
    c.eval_period = 250;
    c.eval_episodes = 40;
    const auto r = train::train(c, splits.train, splits.validation);
    const auto& m = dynamic_cast<const model::NeuralBloomFilter&>(*r.model);
    Rng rng(5);
    const int episodes = 50;
    for (int e = 0; e < episodes; ++e) {
      util[sphering] += m.utilization(tasks::sample_episode(c.task, splits.test, rng).storage) / episodes;
    }
  }
  return {util[1] > util[0], "utilization_plain=" + fmt("%.4f", util[0]) + " utilization_sphered=" + fmt("%.4f", util[1])};
}

// 9. Timing report through the bench command.
Outcome timing() {
  const auto dir = std::filesystem::temp_directory_path() / "nbloom_acceptance_bench";
  std::filesystem::remove_all(dir);
  cli::CliOptions o;
  o.command = "bench";
  o.out = dir;
  o.overrides = {"bench.artifacts=[\"bloom\",\"cuckoo\",\"nbf\",\"lstm\"]", "bench.batches=[1,10000]"};
  std::ostringstream out, err;
  if (cli::run_command(o, out, err) != 0) return {false, "bench failed: " + err.str()};
  std::ifstream in(dir / "timing.csv");
  const auto t = bench::read_csv(in);
  auto find = [&](const std::string& artifact, const std::string& op, const std::string& batch) -> std::size_t {
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (t.rows[i][0] == artifact && t.rows[i][1] == op && t.rows[i][2] == batch) return i;
    }
    throw Error("timing.csv lacks " + artifact + " " + op + " " + batch);
  };
  const double bloom_ms = t.number(find("bloom", "query", "1"), "latency_ms");
  const double nbf_ms = t.number(find("nbf", "query", "1"), "latency_ms");
  const double nbf_tp = t.number(find("nbf", "insert", "10000"), "throughput_per_s");
  const double lstm_tp = t.number(find("lstm", "insert", "10000"), "throughput_per_s");
  std::filesystem::remove_all(dir);
  return {bloom_ms < nbf_ms && nbf_tp >= lstm_tp,
          "bloom_query_ms=" + fmt("%.2e", bloom_ms) + " nbf_query_ms=" + fmt("%.2e", nbf_ms) +
              " nbf_insert_per_s=" + fmt("%.0f", nbf_tp) + " lstm_insert_per_s=" + fmt("%.0f", lstm_tp)};
}

// 10. Moving ZCA whitens a stationary correlated stream.
Outcome zca() {
  const std::size_t d = 4;
  Array mix = Array::matrix(4, 4, {1.5, 0.0, 0.0, 0.0,  //
                                   0.8, 0.6, 0.0, 0.0,  //
                                   -0.4, 0.3, 0.9, 0.0,  //
                                   0.2, -0.5, 0.1, 0.3});
  const std::vector<double> mean{1.0, -2.0, 0.5, 3.0};
  Rng rng(7);
  auto sample = [&](std::size_t rows) {
    Array z({rows, d});
    for (double& v : z.values()) v = rng.normal();
    Array x({rows, d});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < d; ++i) {
        double s = mean[i];
        for (std::size_t j = 0; j < d; ++j) s += mix.at(i, j) * z.at(r, j);
        x.at(r, i) = s;
      }
    }
    return x;
  };
  model::ZcaConfig cfg;
  cfg.gamma = 0.999;
  cfg.period = 10;
  auto state = model::ZcaState::identity(d);
  for (int step = 0; step < 6000; ++step) model::zca_update(state, sample(64), cfg);

  const std::size_t rows = 200000;
  const Array x = sample(rows);
  std::vector<double> projected(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += (x.at(r, i) - state.center[i]) * state.theta.at(i, j);
      projected[r * d + j] = s;
    }
  }
  std::vector<double> mu(d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) mu[j] += projected[r * d + j] / static_cast<double>(rows);
  }
  double frob = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      double cov = 0.0;
      for (std::size_t r = 0; r < rows; ++r) cov += (projected[r * d + a] - mu[a]) * (projected[r * d + b] - mu[b]);
      cov /= static_cast<double>(rows);
      frob += std::pow(cov - (a == b ? 1.0 : 0.0), 2);
    }
  }
  frob = std::sqrt(frob);

  double scalar_err = 0.0;
  for (double var : {0.25, 1.0, 4.0, 9.0, 100.0}) {
    const Array w = model::zca_whitening(Array::matrix(1, 1, {var}), 1e-12);
    scalar_err = std::max(scalar_err, std::abs(w.item() - 1.0 / std::sqrt(var)));
  }
  model::ZcaConfig one = cfg;
  one.epsilon = 1e-12;
  auto s1 = model::ZcaState::identity(1);
  for (int step = 0; step < 3000; ++step) {
    Array b({64, 1});
    for (double& v : b.values()) v = 2.0 + 3.0 * rng.normal();
    model::zca_update(s1, b, one);
  }
  const double est = model::zca_covariance(s1, one).item();
  const double stream_err = std::abs(model::zca_whitening(Array::matrix(1, 1, {est}), 1e-12).item() - 1.0 / std::sqrt(est));
  return {frob < 0.1 && scalar_err < 1e-6 && stream_err < 1e-6,
          "frobenius=" + fmt("%.4f", frob) + " scalar_err=" + fmt("%.2e", scalar_err) +
              " estimated_variance=" + fmt("%.3f", est)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"sizing formulas", sizing},
      {"filter correctness", filter_correctness},
      {"gradient suite", gradients},
      {"order invariance and closed-form writes", order_invariance},
      {"composite guarantee", composite_guarantee},
      {"class task space vs bloom", class_task_space},
      {"database extrapolation", extrapolation},
      {"sphering ablation", sphering_ablation},
      {"timing harness", timing},
      {"zca correctness", zca},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
