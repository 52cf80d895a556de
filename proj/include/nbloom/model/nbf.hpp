#pragma once

#include <cstdint>
#include <vector>

#include "nbloom/model/encoder.hpp"
#include "nbloom/model/familiarity.hpp"
#include "nbloom/model/zca.hpp"

namespace nbloom::model {

// Slot memory M [slots, word] and the number of items written into it.
struct MemoryState {
  diff::Array memory;
  std::uint64_t writes = 0;

  // "NBM1", slots, word, writes, precision (u64 each), then the values as
  // float32 (precision 32) or float64 (precision 64), little-endian.
  std::vector<std::uint8_t> serialize(unsigned precision_bits = 32) const;
  static MemoryState deserialize(std::span<const std::uint8_t> bytes);
};

struct ControllerVars {
  diff::Var z;  // embedding
  diff::Var s;  // raw query word
  diff::Var q;  // query word after optional sphering
  diff::Var a;  // address [rows, slots]
  diff::Var w;  // write word
};

struct ControllerOutput {
  diff::Array z, q, a, w;
};

// Neural Bloom Filter: a = softmax(q A^T) (or its top-k variant), additive
// write M += a^T w, read r = flatten(a * M) and o = f_out([r, w, z]).
class NeuralBloomFilter : public FamiliarityModel {
 public:
  NeuralBloomFilter(ModelConfig config, std::uint64_t seed);
  NeuralBloomFilter(ModelConfig config, diff::ParamStore params);

  ModelKind kind() const override { return ModelKind::nbf; }
  std::unique_ptr<FamiliarityModel> clone() const override;

  ControllerVars controller_graph(const diff::Bindings& p, std::span<const Item> items) const;
  // Memory written by the controller rows: a^T w, [slots, word].
  diff::Var write_memory(const ControllerVars& c) const;
  diff::Var read_graph(const diff::Bindings& p, diff::Var memory, const ControllerVars& c) const;

  diff::Var write_graph(const diff::Bindings& p, std::span<const Item> items,
                        GraphTrace* trace = nullptr) const override;
  diff::Var query_graph(const diff::Bindings& p, diff::Var state, std::span<const Item> queries,
                        GraphTrace* trace = nullptr) const override;
  std::size_t state_values(std::size_t) const override { return nbf().slots * nbf().word_size; }
  void observe_training(std::span<const diff::Array> raw_queries) override;

  diff::Array write(std::span<const Item> items) const override;

  ControllerOutput controller(std::span<const Item> items) const;
  MemoryState empty_memory() const;
  MemoryState write(const MemoryState& state, std::span<const Item> items) const;
  std::vector<double> read(const MemoryState& state, std::span<const Item> queries) const;

  // Address matrix [slots, d_q]; rows are the slot keys.
  diff::Array address_matrix() const;
  std::vector<std::uint16_t> address_seeds() const;
  ZcaState zca() const;
  void set_zca(const ZcaState& z);
  // Utilization of the slots addressed while writing `items`.
  double utilization(std::span<const Item> items) const;

  const NbfConfig& nbf() const { return config_.nbf; }
  const Encoder& encoder() const { return encoder_; }

 private:
  void refresh_address();
  diff::Var address_keys(const diff::Bindings& p) const;

  Encoder encoder_;
  diff::Array fixed_address_;
};

// a = softmax(q keys^T) over slots, or the top-k variant when 0 < k < slots.
diff::Var address_graph(diff::Var q, diff::Var keys, std::size_t k_addr);

// Fraction of slots whose summed address mass over the written rows exceeds
// 1 / (10 slots). Each batch is [rows, slots]; no batches means no writes.
double memory_utilization(std::span<const diff::Array> address_batches, std::size_t slots);

}  // namespace nbloom::model
