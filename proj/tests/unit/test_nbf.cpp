#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nbloom/diff/adam.hpp"
#include "nbloom/diff/gradcheck.hpp"
#include "nbloom/error.hpp"
#include "nbloom/model/address.hpp"
#include "nbloom/model/nbf.hpp"

using namespace nbloom;
using namespace nbloom::model;
using diff::Array;
using diff::Var;

namespace {

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

ModelConfig small_config(std::size_t slots = 6, std::size_t word = 3, std::size_t k = 0, bool sphering = false,
                         AddressMode mode = AddressMode::trainable) {
  ModelConfig c;
  c.encoder.input_dim = 5;
  c.encoder.hidden = 8;
  c.nbf.slots = slots;
  c.nbf.word_size = word;
  c.nbf.query_dim = 4;
  c.nbf.hidden = 7;
  c.nbf.k_addr = k;
  c.nbf.sphering = sphering;
  c.nbf.address_mode = mode;
  return c;
}

Var episode_loss(const NeuralBloomFilter& m, const diff::Bindings& p, std::span<const Item> storage,
                 std::span<const Item> queries, const std::vector<double>& labels) {
  Var state = m.write_graph(p, storage);
  Var logits = m.query_graph(p, state, queries);
  return diff::bce_loss(logits, p.tape().constant(Array::vector(labels)));
}

double chi_square_uniform(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double expect = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) stat += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
  return stat;
}

}  // namespace

TEST_CASE("config validation rejects k_addr above the slot count") {
  ModelConfig c = small_config();
  c.nbf.slots = 64;
  c.nbf.k_addr = 1000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.nbf.k_addr = 64;
  CHECK_NOTHROW(c.validate());
  c.nbf.slots = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("address concentrates on the matching orthogonal key") {
  diff::Tape tape;
  const std::size_t m = 5;
  Array keys({m, m});
  for (std::size_t i = 0; i < m; ++i) keys.at(i, i) = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    Array q({1, m});
    q.at(0, j) = 10.0;
    const Array a = address_graph(tape.constant(q), tape.constant(keys), 0).value();
    const auto best = std::max_element(a.values().begin(), a.values().end()) - a.values().begin();
    CHECK(static_cast<std::size_t>(best) == j);
    CHECK(a.at(0, j) > 0.99);
  }
  CHECK_THROWS_AS(address_graph(tape.constant(Array({1, 3})), tape.constant(keys), 0), Error);
}

TEST_CASE("controller invariants") {
  const auto items = dense_items(9, 5, 1);
  NeuralBloomFilter dense(small_config(6, 3, 0), 3);
  NeuralBloomFilter full_k(small_config(6, 3, 6), 3);
  NeuralBloomFilter sparse(small_config(6, 3, 2), 3);
  const auto a = dense.controller(items);
  const auto b = full_k.controller(items);
  CHECK(a.a == b.a);
  CHECK(a.q == b.q);
  CHECK(a.w == b.w);

  const auto s = sparse.controller(items);
  for (std::size_t r = 0; r < items.size(); ++r) {
    double sum = 0.0;
    int nonzero = 0;
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(s.a.at(r, j) >= 0.0);
      sum += s.a.at(r, j);
      nonzero += s.a.at(r, j) != 0.0;
      CHECK(a.a.at(r, j) >= 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(nonzero <= 2);
  }

  diff::Tape tape;
  diff::Bindings p(tape, dense.params());
  const auto c = dense.controller_graph(p, items);
  CHECK(c.q.id() == c.s.id());  // sphering off: no projection node

  // Deterministic given params.
  CHECK(dense.controller(items).a == a.a);
}

TEST_CASE("write is an outer-product accumulation") {
  NeuralBloomFilter m(small_config(2, 2), 1);
  diff::Tape tape;
  ControllerVars c;
  c.a = tape.constant(Array::matrix(1, 2, {1.0, 0.0}));
  c.w = tape.constant(Array::matrix(1, 2, {0.5, -0.5}));
  const Array mem = m.write_memory(c).value();
  CHECK(mem == Array::matrix(2, 2, {0.5, -0.5, 0.0, 0.0}));

  const auto x1 = dense_items(4, 5, 10);
  const auto x2 = dense_items(3, 5, 11);
  NeuralBloomFilter model(small_config(), 5);
  const auto ab = model.write(model.write(model.empty_memory(), x1), x2);
  const auto ba = model.write(model.write(model.empty_memory(), x2), x1);
  CHECK(diff::max_abs_diff(ab.memory, ba.memory) < 1e-12);
  CHECK(ab.writes == 7);
  CHECK(model.empty_memory().writes == 0);
  CHECK(diff::frobenius_norm(model.empty_memory().memory) == 0.0);
}

TEST_CASE("read with a one-hot address selects one row") {
  NeuralBloomFilter m(small_config(3, 2), 1);
  diff::Tape tape;
  Var a = tape.constant(Array::matrix(1, 3, {0.0, 1.0, 0.0}));
  Var mem = tape.constant(Array::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  Var r = diff::flatten(diff::multiply(diff::flatten(a, {1, 3, 1}), mem), {1, 6});
  CHECK(r.value() == Array::matrix(1, 6, {0, 0, 3, 4, 0, 0}));
}

TEST_CASE("zero memory makes the read independent of the address") {
  ModelConfig cfg = small_config();
  NeuralBloomFilter m(cfg, 7);
  const auto queries = dense_items(5, 5, 12);
  const auto before = m.read(m.empty_memory(), queries);
  auto& keys = m.params().get("address/keys");
  for (double& v : keys.values()) v = -3.0 * v + 0.1;
  const auto after = m.read(m.empty_memory(), queries);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == doctest::Approx(after[i]).epsilon(1e-12));
}

TEST_CASE("memory and logits are invariant to write order") {
  for (std::size_t k : {std::size_t{0}, std::size_t{2}}) {
    NeuralBloomFilter m(small_config(6, 3, k, k != 0), 21);
    auto storage = dense_items(12, 5, 13);
    const auto queries = dense_items(10, 5, 14);
    const auto ref_state = m.write(m.empty_memory(), storage);
    const auto ref_logits = m.read(ref_state, queries);
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
      rng.shuffle(storage);
      // Item-by-item writes exercise the sequential accumulation path.
      auto state = m.empty_memory();
      for (const auto& it : storage) state = m.write(state, std::span<const Item>(&it, 1));
      CHECK(diff::frobenius_norm(ref_state.memory) > 0.0);
      const double rel = [&] {
        Array d = state.memory;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= ref_state.memory[i];
        return diff::frobenius_norm(d) / diff::frobenius_norm(ref_state.memory);
      }();
      CHECK(rel < 1e-9);
      const auto logits = m.read(state, queries);
      for (std::size_t i = 0; i < logits.size(); ++i) CHECK(std::abs(logits[i] - ref_logits[i]) < 1e-6);
    }
  }
}

TEST_CASE("write-word gradients follow the closed form without unrolling") {
  for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
    NeuralBloomFilter m(small_config(6, 3, k), 31);
    const auto storage = dense_items(8, 5, 32);
    const auto queries = dense_items(6, 5, 33);
    const std::vector<double> labels{1, 0, 1, 0, 0, 1};
    diff::Tape tape;
    diff::Bindings p(tape, m.params());
    const auto c = m.controller_graph(p, storage);
    Var mem = m.write_memory(c);
    Var logits = m.query_graph(p, mem, queries);
    Var loss = diff::bce_loss(logits, tape.constant(Array::vector(labels)));
    tape.backward(loss);
    const Array& dm = mem.grad();  // [slots, word]
    const Array& a = c.a.value();  // [n, slots]
    const Array& dw = c.w.grad();  // [n, word]
    double worst = 0.0;
    for (std::size_t i = 0; i < storage.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double closed = 0.0;
        for (std::size_t s = 0; s < 6; ++s) closed += dm.at(s, j) * a.at(i, s);
        worst = std::max(worst, std::abs(closed - dw.at(i, j)) / (std::abs(dw.at(i, j)) + 1e-12));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("episode loss gradients match finite differences") {
  struct Case {
    const char* name;
    ModelConfig cfg;
  };
  std::vector<Case> cases{{"dense", small_config(6, 3, 0)},
                          {"sparse", small_config(6, 3, 2)},
                          {"sphering", small_config(6, 3, 2, true)},
                          {"fixed", small_config(6, 3, 0, false, AddressMode::gaussian_fixed)},
                          {"seeded", small_config(20, 2, 0, false, AddressMode::seeded)}};
  const auto storage = dense_items(4, 5, 41);
  const auto queries = dense_items(4, 5, 42);
  const std::vector<double> labels{1, 0, 0, 1};
  for (auto& c : cases) {
    CAPTURE(std::string(c.name));
    NeuralBloomFilter m(c.cfg, 43);
    if (c.cfg.nbf.sphering) {
      // A non-trivial projection.
      auto z = m.zca();
      for (std::size_t i = 0; i < z.theta.size(); ++i) z.theta[i] += 0.1 * std::sin(static_cast<double>(i));
      m.set_zca(z);
    }
    const auto r = diff::param_finite_diff_check(
        [&](const diff::Bindings& p) { return episode_loss(m, p, storage, queries, labels); }, m.params());
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("text encoders feed the controller") {
  ModelConfig tri = small_config();
  tri.encoder.kind = EncoderKind::trigram;
  tri.encoder.buckets = 32;
  ModelConfig chars = small_config();
  chars.encoder.kind = EncoderKind::char_lstm;
  chars.encoder.max_chars = 6;
  const std::vector<Item> storage{std::string("apple"), std::string("banana"), std::string("kiwi")};
  const std::vector<Item> queries{std::string("apple"), std::string("fig")};
  for (auto* cfg : {&tri, &chars}) {
    NeuralBloomFilter m(*cfg, 3);
    CHECK(m.logits(storage, queries).size() == 2);
    const auto r = diff::param_finite_diff_check(
        [&](const diff::Bindings& p) { return episode_loss(m, p, storage, queries, {1, 0}); }, m.params());
    CHECK(r.max_relative_error < 1e-4);
  }
  NeuralBloomFilter dense(small_config(), 1);
  CHECK_THROWS_AS(dense.logits(storage, queries), DataError);

  std::vector<double> f(64);
  trigram_features("ab", f);
  CHECK(std::count_if(f.begin(), f.end(), [](double v) { return v != 0.0; }) >= 1);
  double norm = 0.0;
  for (double v : f) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("fixed and seeded address matrices are not trained") {
  for (auto mode : {AddressMode::gaussian_fixed, AddressMode::seeded}) {
    NeuralBloomFilter m(small_config(20, 2, 0, true, mode), 51);
    const auto before_params = m.params();
    const Array before = m.address_matrix();
    const auto storage = dense_items(6, 5, 52);
    const auto queries = dense_items(6, 5, 53);
    diff::Tape tape;
    diff::Bindings p(tape, m.params());
    Var loss = episode_loss(m, p, storage, queries, {1, 1, 1, 0, 0, 0});
    tape.backward(loss);
    auto grads = p.gradients();
    for (const auto& [name, g] : grads) CHECK(name.rfind("const/", 0) != 0);
    diff::AdamState st;
    st.config.learning_rate = 0.1;
    diff::adam_step(m.params(), grads, st);
    CHECK(m.address_matrix() == before);
    for (const auto& [name, v] : before_params.arrays()) {
      if (name.rfind("const/", 0) == 0) CHECK(m.params().get(name) == v);
    }
  }
}

TEST_CASE("seeded address rows") {
  const Array a = regenerate_address_rows(777, 256);
  CHECK(a.shape() == diff::Shape{16, 256});
  CHECK(regenerate_address_rows(777, 256) == a);
  CHECK_FALSE(regenerate_address_rows(778, 256) == a);
  // Coarse normality of each 16-row block, pooled.
  for (std::uint16_t seed : {0, 1, 777, 40000, 65535}) {
    const Array block = regenerate_address_rows(seed, 256);
    double mean = 0.0, var = 0.0;
    for (double v : block.values()) mean += v;
    mean /= static_cast<double>(block.size());
    for (double v : block.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(block.size() - 1);
    CAPTURE(seed);
    CHECK(std::abs(mean) < 0.1);
    CHECK(var >= 0.8);
    CHECK(var <= 1.2);
  }

  NeuralBloomFilter m(small_config(40, 2, 0, false, AddressMode::seeded), 5);
  const auto seeds = m.address_seeds();
  REQUIRE(seeds.size() == 3);
  const Array full = address_from_seeds(seeds, 40, 4);
  CHECK(full == m.address_matrix());
  const Array block = regenerate_address_rows(seeds[1], 4);
  for (std::size_t c = 0; c < 4; ++c) CHECK(full.at(16 + 5, c) == block.at(5, c));
  // Reloading from parameters regenerates the same matrix.
  NeuralBloomFilter again(m.config(), m.params());
  CHECK(again.address_matrix() == full);
}

TEST_CASE("uniform slot selection with fixed addresses and sphered queries") {
  ModelConfig cfg = small_config(16, 2, 1, false, AddressMode::gaussian_fixed);
  // Moderate width: Gaussian rows of A sit close to a sphere.
  cfg.nbf.query_dim = 256;
  NeuralBloomFilter m(cfg, 61);
  // Sphered queries: zero mean, identity covariance.
  Rng rng(62);
  Array q({800, 256});
  for (double& v : q.values()) v = rng.normal();
  diff::Tape tape;
  const Array a = address_graph(tape.constant(q), tape.constant(m.address_matrix()), 1).value();
  std::vector<std::size_t> counts(16, 0);
  for (std::size_t r = 0; r < 800; ++r) {
    const auto row = a.row(r);
    CHECK(std::count(row.begin(), row.end(), 1.0) == 1);
    counts[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())]++;
  }
  // chi-square critical value for 15 degrees of freedom at 0.01.
  CHECK(chi_square_uniform(counts) < 30.578);
}

TEST_CASE("memory utilization") {
  CHECK(memory_utilization({}, 8) == 0.0);
  Array one_hot({1, 8});
  one_hot.at(0, 3) = 1.0;
  CHECK(memory_utilization(std::span<const Array>(&one_hot, 1), 8) == doctest::Approx(1.0 / 8.0));
  Array spread({2, 4}, 0.25);
  CHECK(memory_utilization(std::span<const Array>(&spread, 1), 4) == 1.0);
  // Slots below a tenth of the uniform share do not count.
  const Array skew = Array::matrix(1, 4, {0.97, 0.01, 0.01, 0.01});
  CHECK(memory_utilization(std::span<const Array>(&skew, 1), 4) == 0.25);
  const Array mild = Array::matrix(1, 4, {0.7, 0.1, 0.1, 0.1});
  CHECK(memory_utilization(std::span<const Array>(&mild, 1), 4) == 1.0);
  NeuralBloomFilter m(small_config(), 1);
  const double u = m.utilization(dense_items(20, 5, 3));
  CHECK(u > 0.0);
  CHECK(u <= 1.0);
}

TEST_CASE("sphered queries are centered before projection") {
  NeuralBloomFilter m(small_config(6, 3, 0, true), 5);
  const auto items = dense_items(7, 5, 6);
  const auto raw = m.controller(items).q;  // theta = I, center = 0 at initialisation
  ZcaState z = m.zca();
  for (std::size_t i = 0; i < z.dim(); ++i) z.center[i] = 0.1 * static_cast<double>(i + 1);
  for (std::size_t i = 0; i < z.dim(); ++i) z.theta.at(i, i) = 2.0;
  m.set_zca(z);
  const auto q = m.controller(items).q;
  for (std::size_t r = 0; r < items.size(); ++r) {
    for (std::size_t i = 0; i < z.dim(); ++i) CHECK(std::abs(q.at(r, i) - 2.0 * (raw.at(r, i) - z.center[i])) < 1e-12);
  }
}

TEST_CASE("zca centre follows the bias-corrected mean") {
  ZcaConfig cfg;
  cfg.period = 1;
  cfg.eta = 0.0;
  ZcaState z = ZcaState::identity(2);
  const Array batch = Array::matrix(2, 2, {3.0, -1.0, 5.0, 1.0});
  zca_update(z, batch, cfg, true);
  CHECK(std::abs(z.center[0] - 4.0) < 1e-12);
  CHECK(std::abs(z.center[1] - 0.0) < 1e-12);
}

TEST_CASE("zca whitening") {
  const Array w = zca_whitening(Array::matrix(1, 1, {4.0}), 1e-5);
  CHECK(std::abs(w.item() - 0.5) < 1e-6);
  CHECK_THROWS_AS(zca_whitening(Array::matrix(1, 1, {std::nan("")}), 1e-5), Error);

  ZcaConfig cfg;
  cfg.period = 10;
  ZcaState z = ZcaState::identity(4);
  Rng rng(3);
  for (int step = 0; step < 1000; ++step) {
    Array batch({10, 4});
    for (double& v : batch.values()) v = rng.normal();
    zca_update(z, batch, cfg);
  }
  Array diff = z.theta;
  for (std::size_t i = 0; i < 4; ++i) diff.at(i, i) -= 1.0;
  CHECK(diff::frobenius_norm(diff) < 0.1);

  const ZcaState frozen = z;
  zca_update(z, Array({10, 4}, 5.0), cfg, false);
  CHECK(z.theta == frozen.theta);
  CHECK(z.step == frozen.step);
  CHECK_THROWS_AS(zca_update(z, Array({10, 3}), cfg), Error);
}

TEST_CASE("memory state serialization") {
  NeuralBloomFilter m(small_config(), 8);
  const auto st = m.write(m.empty_memory(), dense_items(5, 5, 9));
  const auto b32 = st.serialize();
  CHECK(std::string(b32.begin(), b32.begin() + 4) == "NBM1");
  CHECK(b32.size() == 4 + 32 + 4 * st.memory.size());
  const auto back32 = MemoryState::deserialize(b32);
  CHECK(back32.writes == 5);
  CHECK(diff::max_abs_diff(back32.memory, st.memory) < 1e-6);
  CHECK(MemoryState::deserialize(st.serialize(64)).memory == st.memory);
  CHECK_THROWS_AS(st.serialize(16), ConfigError);
  auto bad = b32;
  bad.resize(bad.size() - 1);
  CHECK_THROWS_AS(MemoryState::deserialize(bad), DataError);
}

TEST_CASE("parameters survive a checkpoint round trip") {
  NeuralBloomFilter m(small_config(6, 3, 2, true), 71);
  const auto items = dense_items(6, 5, 72);
  const auto restored = restore_model(m.config(), diff::ParamStore::deserialize(m.params().serialize()));
  CHECK(restored->logits(items, items) == m.logits(items, items));
  ModelConfig other = m.config();
  other.nbf.address_mode = AddressMode::seeded;
  CHECK_THROWS_AS(restore_model(other, m.params()), DataError);
}
