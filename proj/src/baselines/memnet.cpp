#include "nbloom/baselines/memnet.hpp"

#include <algorithm>

#include "nbloom/error.hpp"

namespace nbloom::baselines {

using diff::Array;
using diff::Var;

MemNetFamiliarityModel::MemNetFamiliarityModel(model::ModelConfig config, std::uint64_t seed)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  Rng rng(seed);
  encoder_.init(params_, rng);
  diff::init_linear(params_, "mem/proj", encoder_.output_dim(), config_.memnet.word_size, rng);
  params_.set("mem/alpha", Array::vector({10.0}));
  params_.set("mem/beta", Array::vector({-5.0}));
}

MemNetFamiliarityModel::MemNetFamiliarityModel(model::ModelConfig config, diff::ParamStore params)
    : FamiliarityModel(std::move(config)), encoder_(config_.encoder, "enc") {
  config_.validate();
  params_ = std::move(params);
  if (!params_.contains("mem/proj/w")) throw DataError("checkpoint lacks memory-network parameters");
}

std::unique_ptr<model::FamiliarityModel> MemNetFamiliarityModel::clone() const {
  return std::make_unique<MemNetFamiliarityModel>(*this);
}

Var MemNetFamiliarityModel::embed(const diff::Bindings& p, std::span<const Item> items) const {
  return diff::l2_normalize(diff::linear(p, "mem/proj", encoder_.encode(p, items)));
}

Var MemNetFamiliarityModel::write_graph(const diff::Bindings& p, std::span<const Item> items,
                                        model::GraphTrace*) const {
  if (items.empty()) throw DataError("memnet write: empty storage set");
  return embed(p, items);
}

Var MemNetFamiliarityModel::query_graph(const diff::Bindings& p, Var state, std::span<const Item> queries,
                                        model::GraphTrace*) const {
  if (state.shape().size() != 2 || state.shape()[1] != config_.memnet.word_size) {
    throw Error("memnet query: memory shape " + diff::shape_string(state.shape()) + " does not match config");
  }
  Var sims = diff::matmul(embed(p, queries), state, false, true);
  Var best = diff::reduce_max(sims);
  return diff::add(diff::multiply(best, p["mem/alpha"]), p["mem/beta"]);
}

Array MemNetFamiliarityModel::write(std::span<const Item> items) const {
  if (items.empty()) throw DataError("memnet write: empty storage set");
  const std::size_t d = config_.memnet.word_size;
  Array rows({items.size(), d});
  for (std::size_t start = 0; start < items.size(); start += kQueryChunk) {
    const auto chunk = items.subspan(start, std::min(kQueryChunk, items.size() - start));
    diff::Tape tape;
    diff::Bindings p(tape, params_);
    const Array& e = embed(p, chunk).value();
    std::copy(e.values().begin(), e.values().end(), rows.values().begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  return rows;
}

std::vector<double> MemNetFamiliarityModel::max_similarity(const Array& memory, std::span<const Item> queries) const {
  diff::Tape tape;
  diff::Bindings p(tape, params_);
  Var sims = diff::matmul(embed(p, queries), tape.constant(memory), false, true);
  const Array& v = diff::reduce_max(sims).value();
  return {v.values().begin(), v.values().end()};
}

}  // namespace nbloom::baselines
