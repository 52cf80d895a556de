#include "nbloom/baselines/lstm_model.hpp"

#include "nbloom/diff/lstm.hpp"
#include "nbloom/error.hpp"

namespace nbloom::baselines {

using diff::Array;
using diff::Var;

LstmFamiliarityModel::LstmFamiliarityModel(model::ModelConfig config, std::uint64_t seed)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  Rng rng(seed);
  encoder_.init(params_, rng);
  const auto& c = config_.lstm;
  diff::init_lstm(params_, "lstm", encoder_.output_dim(), c.hidden, rng);
  diff::init_linear(params_, "qmlp/l1", 2 * c.hidden + encoder_.output_dim(), c.query_hidden, rng);
  diff::init_linear(params_, "qmlp/l2", c.query_hidden, c.query_hidden, rng);
  diff::init_linear(params_, "qmlp/l3", c.query_hidden, 1, rng);
}

LstmFamiliarityModel::LstmFamiliarityModel(model::ModelConfig config, diff::ParamStore params)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  params_ = std::move(params);
  if (!params_.contains("lstm/i/wx")) throw DataError("checkpoint lacks LSTM parameters");
}

std::unique_ptr<model::FamiliarityModel> LstmFamiliarityModel::clone() const {
  return std::make_unique<LstmFamiliarityModel>(*this);
}

Var LstmFamiliarityModel::write_graph(const diff::Bindings& p, std::span<const Item> items,
                                      model::GraphTrace*) const {
  if (items.empty()) throw DataError("lstm write: empty storage set");
  Var enc = encoder_.encode(p, items);
  auto state = diff::lstm_zero_state(p.tape(), 1, config_.lstm.hidden);
  for (std::size_t i = 0; i < items.size(); ++i) {
    state = diff::lstm_cell(p, "lstm", diff::select_rows(enc, {i}), state);
  }
  return diff::concat({state.h, state.c});
}

Var LstmFamiliarityModel::query_graph(const diff::Bindings& p, Var state, std::span<const Item> queries,
                                      model::GraphTrace*) const {
  const std::size_t t = queries.size();
  if (state.shape() != diff::Shape{1, 2 * config_.lstm.hidden}) {
    throw Error("lstm query: state shape " + diff::shape_string(state.shape()) + " does not match config");
  }
  Var zq = encoder_.encode(p, queries);
  Var tiled = diff::matmul(p.tape().constant(Array({t, 1}, 1.0)), state);
  Var x = diff::concat({tiled, zq});
  Var h = diff::leaky_relu(diff::linear(p, "qmlp/l1", x));
  h = diff::leaky_relu(diff::linear(p, "qmlp/l2", h));
  return diff::flatten(diff::linear(p, "qmlp/l3", h), {t});
}

}  // namespace nbloom::baselines
