#pragma once

#include <memory>
#include <span>
#include <vector>

#include "nbloom/diff/params.hpp"
#include "nbloom/model/config.hpp"
#include "nbloom/tasks/dataset.hpp"

namespace nbloom::model {

using tasks::Item;

// Intermediate nodes a training loop may want after building an episode graph.
struct GraphTrace {
  std::vector<diff::Var> raw_queries;      // pre-sphering query words
  std::vector<diff::Var> write_addresses;  // [n, slots] address rows used for writing
};

// A one-shot familiarity model: write a set once into a state, then score
// queries against that state. Training goes through the graph builders; the
// plain methods run inference on the current parameters.
class FamiliarityModel {
 public:
  explicit FamiliarityModel(ModelConfig config) : config_(std::move(config)) {}
  virtual ~FamiliarityModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::unique_ptr<FamiliarityModel> clone() const = 0;

  virtual diff::Var write_graph(const diff::Bindings& p, std::span<const Item> items,
                                GraphTrace* trace = nullptr) const = 0;
  // Logits, shape [queries.size()].
  virtual diff::Var query_graph(const diff::Bindings& p, diff::Var state, std::span<const Item> queries,
                                GraphTrace* trace = nullptr) const = 0;

  // Real values held in the state after writing n items.
  virtual std::size_t state_values(std::size_t n) const = 0;

  // Called once per optimizer step with the traced raw queries.
  virtual void observe_training(std::span<const diff::Array> raw_queries) { (void)raw_queries; }

  virtual diff::Array write(std::span<const Item> items) const;
  virtual std::vector<double> query(const diff::Array& state, std::span<const Item> queries) const;
  std::vector<double> logits(std::span<const Item> storage, std::span<const Item> queries) const;

  const ModelConfig& config() const noexcept { return config_; }
  const diff::ParamStore& params() const noexcept { return params_; }
  diff::ParamStore& params() noexcept { return params_; }
  std::size_t param_count() const { return params_.trainable_count(); }

 protected:
  static constexpr std::size_t kQueryChunk = 2048;

  ModelConfig config_;
  diff::ParamStore params_;
};

std::unique_ptr<FamiliarityModel> make_model(const ModelConfig& config, std::uint64_t seed);
// Rebuilds a model around saved parameters (checkpoint load).
std::unique_ptr<FamiliarityModel> restore_model(const ModelConfig& config, diff::ParamStore params);

}  // namespace nbloom::model
