#pragma once

#include "nbloom/model/encoder.hpp"
#include "nbloom/model/familiarity.hpp"

namespace nbloom::baselines {

using model::Item;

// Unrolls an LSTM over the encoded items; the final [h, c] is the state.
// Queries go through an MLP over [state, f_enc(q)].
class LstmFamiliarityModel : public model::FamiliarityModel {
 public:
  LstmFamiliarityModel(model::ModelConfig config, std::uint64_t seed);
  LstmFamiliarityModel(model::ModelConfig config, diff::ParamStore params);

  model::ModelKind kind() const override { return model::ModelKind::lstm; }
  std::unique_ptr<model::FamiliarityModel> clone() const override;

  diff::Var write_graph(const diff::Bindings& p, std::span<const Item> items,
                        model::GraphTrace* trace = nullptr) const override;
  diff::Var query_graph(const diff::Bindings& p, diff::Var state, std::span<const Item> queries,
                        model::GraphTrace* trace = nullptr) const override;
  std::size_t state_values(std::size_t) const override { return 2 * config_.lstm.hidden; }

 private:
  model::Encoder encoder_;
};

}  // namespace nbloom::baselines
