#pragma once

#include "nbloom/model/encoder.hpp"
#include "nbloom/model/familiarity.hpp"

namespace nbloom::baselines {

using model::Item;

// One memory row per stored item: the unit-normalized projection of its
// embedding. A query scores alpha * max_i cos(e_q, row_i) + beta.
class MemNetFamiliarityModel : public model::FamiliarityModel {
 public:
  MemNetFamiliarityModel(model::ModelConfig config, std::uint64_t seed);
  MemNetFamiliarityModel(model::ModelConfig config, diff::ParamStore params);

  model::ModelKind kind() const override { return model::ModelKind::memnet; }
  std::unique_ptr<model::FamiliarityModel> clone() const override;

  diff::Var write_graph(const diff::Bindings& p, std::span<const Item> items,
                        model::GraphTrace* trace = nullptr) const override;
  diff::Var query_graph(const diff::Bindings& p, diff::Var state, std::span<const Item> queries,
                        model::GraphTrace* trace = nullptr) const override;
  std::size_t state_values(std::size_t n) const override { return n * config_.memnet.word_size; }

  diff::Array write(std::span<const Item> items) const override;
  // Max cosine similarity of each query against the rows.
  std::vector<double> max_similarity(const diff::Array& memory, std::span<const Item> queries) const;

 private:
  diff::Var embed(const diff::Bindings& p, std::span<const Item> items) const;

  model::Encoder encoder_;
};

}  // namespace nbloom::baselines
