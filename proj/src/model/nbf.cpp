#include "nbloom/model/nbf.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>

#include "nbloom/error.hpp"
#include "nbloom/model/address.hpp"
#include "nbloom/serial.hpp"

namespace nbloom::model {

using diff::Array;
using diff::Var;

namespace {

constexpr const char* kKeys = "address/keys";
constexpr const char* kFixed = "const/address";
constexpr const char* kSeeds = "const/address_seeds";
constexpr const char* kZca = "const/zca";

// One hidden layer with layer norm, then a linear projection.
Var hidden_ln_net(const diff::Bindings& p, const std::string& name, Var x) {
  Var h = diff::leaky_relu(diff::linear(p, name + "/l1", x));
  h = diff::layer_norm(p, name + "/ln", h);
  return diff::linear(p, name + "/l2", h);
}

void init_hidden_ln_net(diff::ParamStore& s, const std::string& name, std::size_t in, std::size_t hidden,
                        std::size_t out, Rng& rng) {
  diff::init_linear(s, name + "/l1", in, hidden, rng);
  diff::init_layer_norm(s, name + "/ln", hidden);
  diff::init_linear(s, name + "/l2", hidden, out, rng);
}

}  // namespace

std::vector<std::uint8_t> MemoryState::serialize(unsigned precision_bits) const {
  if (precision_bits != 32 && precision_bits != 64) {
    throw ConfigError("memory serialization supports precision 32 or 64, got " + std::to_string(precision_bits));
  }
  if (memory.rank() != 2) throw Error("memory state must be a matrix");
  ByteWriter w("NBM1");
  w.u64(memory.dim(0));
  w.u64(memory.dim(1));
  w.u64(writes);
  w.u64(precision_bits);
  for (double v : memory.values()) {
    if (precision_bits == 32) {
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  return w.take();
}

MemoryState MemoryState::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "NBM1");
  const auto slots = r.u64();
  const auto word = r.u64();
  MemoryState m;
  m.writes = r.u64();
  const auto precision = r.u64();
  if (precision != 32 && precision != 64) throw DataError("NBM1: unsupported precision " + std::to_string(precision));
  if (slots == 0 || word == 0 || slots > (1u << 24) || word > (1u << 24)) throw DataError("NBM1: bad dimensions");
  m.memory = Array({slots, word});
  for (double& v : m.memory.values()) v = precision == 32 ? static_cast<double>(r.f32()) : r.f64();
  r.expect_end();
  return m;
}

NeuralBloomFilter::NeuralBloomFilter(ModelConfig config, std::uint64_t seed)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  const NbfConfig& c = nbf();
  Rng rng(seed);
  encoder_.init(params_, rng);
  const std::size_t zdim = encoder_.output_dim();
  init_hidden_ln_net(params_, "q", zdim, c.hidden, c.query_dim, rng);
  init_hidden_ln_net(params_, "w", zdim, c.hidden, c.word_size, rng);
  const std::size_t in = c.slots * c.word_size + c.word_size + zdim;
  diff::init_linear(params_, "out/l1", in, c.hidden, rng);
  diff::init_linear(params_, "out/l2", c.hidden, c.hidden, rng);
  diff::init_linear(params_, "out/l3", c.hidden, 1, rng);

  switch (c.address_mode) {
    case AddressMode::trainable: {
      Array keys({c.slots, c.query_dim});
      const double scale = 1.0 / std::sqrt(static_cast<double>(c.query_dim));
      for (double& v : keys.values()) v = scale * rng.normal();
      params_.set(kKeys, std::move(keys));
      break;
    }
    case AddressMode::gaussian_fixed: {
      Array keys({c.slots, c.query_dim});
      for (double& v : keys.values()) v = rng.normal();
      params_.set(kFixed, std::move(keys));
      break;
    }
    case AddressMode::seeded: {
      Array seeds({seeds_needed(c.slots)});
      for (double& v : seeds.values()) v = static_cast<double>(rng.next_u64() & 0xffff);
      params_.set(kSeeds, std::move(seeds));
      break;
    }
  }
  if (c.sphering) ZcaState::identity(c.query_dim).store(params_, kZca);
  refresh_address();
}

NeuralBloomFilter::NeuralBloomFilter(ModelConfig config, diff::ParamStore params)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  params_ = std::move(params);
  const NbfConfig& c = nbf();
  const char* needed = c.address_mode == AddressMode::trainable        ? kKeys
                       : c.address_mode == AddressMode::gaussian_fixed ? kFixed
                                                                       : kSeeds;
  if (!params_.contains(needed)) throw DataError(std::string("checkpoint lacks '") + needed + "'");
  if (c.sphering && !params_.contains(std::string(kZca) + "/theta")) {
    throw DataError("checkpoint lacks sphering state");
  }
  refresh_address();
}

std::unique_ptr<FamiliarityModel> NeuralBloomFilter::clone() const {
  return std::make_unique<NeuralBloomFilter>(*this);
}

void NeuralBloomFilter::refresh_address() {
  const NbfConfig& c = nbf();
  if (c.address_mode == AddressMode::seeded) {
    fixed_address_ = address_from_seeds(address_seeds(), c.slots, c.query_dim);
  } else if (c.address_mode == AddressMode::gaussian_fixed) {
    fixed_address_ = params_.get(kFixed);
  }
  if (c.address_mode != AddressMode::trainable) {
    const Array& a = fixed_address_;
    if (a.rank() != 2 || a.dim(0) != c.slots || a.dim(1) != c.query_dim) {
      throw DataError("address matrix shape " + diff::shape_string(a.shape()) + " does not match config");
    }
  }
}

std::vector<std::uint16_t> NeuralBloomFilter::address_seeds() const {
  if (!params_.contains(kSeeds)) return {};
  std::vector<std::uint16_t> out;
  for (double v : params_.get(kSeeds).values()) out.push_back(static_cast<std::uint16_t>(v));
  return out;
}

Array NeuralBloomFilter::address_matrix() const {
  return nbf().address_mode == AddressMode::trainable ? params_.get(kKeys) : fixed_address_;
}

ZcaState NeuralBloomFilter::zca() const {
  if (!nbf().sphering) return ZcaState::identity(nbf().query_dim);
  return ZcaState::load(params_, kZca);
}

void NeuralBloomFilter::set_zca(const ZcaState& z) {
  if (!nbf().sphering) throw ConfigError("sphering is disabled for this model");
  z.store(params_, kZca);
}

Var NeuralBloomFilter::address_keys(const diff::Bindings& p) const {
  switch (nbf().address_mode) {
    case AddressMode::trainable: return p[kKeys];
    case AddressMode::gaussian_fixed: return p[kFixed];
    case AddressMode::seeded: return p.tape().constant(fixed_address_, "address");
  }
  throw Error("unreachable address mode");
}

ControllerVars NeuralBloomFilter::controller_graph(const diff::Bindings& p, std::span<const Item> items) const {
  const NbfConfig& c = nbf();
  ControllerVars out;
  out.z = encoder_.encode(p, items);
  out.s = hidden_ln_net(p, "q", out.z);
  if (c.sphering) {
    Var centered = diff::add(out.s, diff::scale(p[std::string(kZca) + "/center"], -1.0));
    out.q = diff::matmul(centered, p[std::string(kZca) + "/theta"]);
  } else {
    out.q = out.s;
  }
  out.a = address_graph(out.q, address_keys(p), c.k_addr);
  out.w = hidden_ln_net(p, "w", out.z);
  return out;
}

Var NeuralBloomFilter::write_memory(const ControllerVars& c) const {
  return diff::matmul(c.a, c.w, true, false);
}

Var NeuralBloomFilter::read_graph(const diff::Bindings& p, Var memory, const ControllerVars& c) const {
  const NbfConfig& cfg = nbf();
  const std::size_t rows = c.a.shape().front();
  if (memory.shape() != diff::Shape{cfg.slots, cfg.word_size}) {
    throw Error("read: memory shape " + diff::shape_string(memory.shape()) + " does not match config");
  }
  Var mask = diff::flatten(c.a, {rows, cfg.slots, 1});
  Var r = diff::flatten(diff::multiply(mask, memory), {rows, cfg.slots * cfg.word_size});
  Var x = diff::concat({r, c.w, c.z});
  Var h1 = diff::leaky_relu(diff::linear(p, "out/l1", x));
  Var h2 = diff::add(h1, diff::leaky_relu(diff::linear(p, "out/l2", h1)));
  return diff::flatten(diff::linear(p, "out/l3", h2), {rows});
}

Var NeuralBloomFilter::write_graph(const diff::Bindings& p, std::span<const Item> items, GraphTrace* trace) const {
  ControllerVars c = controller_graph(p, items);
  if (trace) {
    trace->raw_queries.push_back(c.s);
    trace->write_addresses.push_back(c.a);
  }
  return write_memory(c);
}

Var NeuralBloomFilter::query_graph(const diff::Bindings& p, Var state, std::span<const Item> queries,
                                   GraphTrace* trace) const {
  ControllerVars c = controller_graph(p, queries);
  if (trace) trace->raw_queries.push_back(c.s);
  return read_graph(p, state, c);
}

void NeuralBloomFilter::observe_training(std::span<const Array> raw_queries) {
  if (!nbf().sphering || raw_queries.empty()) return;
  std::size_t rows = 0;
  for (const Array& a : raw_queries) rows += a.dim(0);
  const std::size_t d = nbf().query_dim;
  Array batch({rows, d});
  std::size_t at = 0;
  for (const Array& a : raw_queries) {
    std::copy(a.values().begin(), a.values().end(), batch.values().begin() + static_cast<std::ptrdiff_t>(at));
    at += a.size();
  }
  ZcaState z = zca();
  zca_update(z, batch, nbf().zca, true);
  z.store(params_, kZca);
}

ControllerOutput NeuralBloomFilter::controller(std::span<const Item> items) const {
  diff::Tape tape;
  diff::Bindings p(tape, params_);
  ControllerVars c = controller_graph(p, items);
  return {c.z.value(), c.q.value(), c.a.value(), c.w.value()};
}

MemoryState NeuralBloomFilter::empty_memory() const {
  return {Array({nbf().slots, nbf().word_size}), 0};
}

MemoryState NeuralBloomFilter::write(const MemoryState& state, std::span<const Item> items) const {
  if (state.memory.shape() != diff::Shape{nbf().slots, nbf().word_size}) {
    throw Error("write: memory shape " + diff::shape_string(state.memory.shape()) + " does not match config");
  }
  MemoryState out = state;
  for (std::size_t start = 0; start < items.size(); start += kQueryChunk) {
    const auto chunk = items.subspan(start, std::min(kQueryChunk, items.size() - start));
    diff::Tape tape;
    diff::Bindings p(tape, params_);
    const Array& m = write_memory(controller_graph(p, chunk)).value();
    for (std::size_t i = 0; i < m.size(); ++i) out.memory[i] += m[i];
  }
  out.writes += items.size();
  return out;
}

Array NeuralBloomFilter::write(std::span<const Item> items) const {
  if (items.empty()) throw DataError("write: empty storage set");
  return write(empty_memory(), items).memory;
}

std::vector<double> NeuralBloomFilter::read(const MemoryState& state, std::span<const Item> queries) const {
  return query(state.memory, queries);
}

double NeuralBloomFilter::utilization(std::span<const Item> items) const {
  std::vector<Array> batches;
  for (std::size_t start = 0; start < items.size(); start += kQueryChunk) {
    batches.push_back(controller(items.subspan(start, std::min(kQueryChunk, items.size() - start))).a);
  }
  return memory_utilization(batches, nbf().slots);
}

Var address_graph(Var q, Var keys, std::size_t k_addr) {
  if (keys.shape().back() != q.shape().back()) {
    throw Error("controller: query dimension " + std::to_string(q.shape().back()) +
                " does not match address dimension " + std::to_string(keys.shape().back()));
  }
  const std::size_t slots = keys.shape().front();
  Var logits = diff::matmul(q, keys, false, true);
  return k_addr != 0 && k_addr < slots ? diff::topk_softmax(logits, k_addr) : diff::softmax(logits);
}

double memory_utilization(std::span<const Array> address_batches, std::size_t slots) {
  if (address_batches.empty() || slots == 0) return 0.0;
  std::vector<double> mass(slots, 0.0);
  for (const Array& a : address_batches) {
    if (a.last_dim() != slots) throw Error("memory_utilization: address width does not match slot count");
    for (std::size_t r = 0; r < a.outer_size(); ++r) {
      for (std::size_t j = 0; j < slots; ++j) mass[j] += a.at(r, j);
    }
  }
  // Non-negligible: at least a tenth of the share a uniform spread would give.
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  const double floor = total / (10.0 * static_cast<double>(slots));
  const auto used = std::count_if(mass.begin(), mass.end(), [&](double m) { return m > floor; });
  return static_cast<double>(used) / static_cast<double>(slots);
}

}  // namespace nbloom::model
