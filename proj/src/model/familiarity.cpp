#include "nbloom/model/familiarity.hpp"

#include <algorithm>

#include "nbloom/baselines/lstm_model.hpp"
#include "nbloom/baselines/memnet.hpp"
#include "nbloom/error.hpp"
#include "nbloom/model/nbf.hpp"

namespace nbloom::model {

diff::Array FamiliarityModel::write(std::span<const Item> items) const {
  diff::Tape tape;
  diff::Bindings p(tape, params_);
  return write_graph(p, items).value();
}

std::vector<double> FamiliarityModel::query(const diff::Array& state, std::span<const Item> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (std::size_t start = 0; start < queries.size(); start += kQueryChunk) {
    const auto chunk = queries.subspan(start, std::min(kQueryChunk, queries.size() - start));
    diff::Tape tape;
    diff::Bindings p(tape, params_);
    const diff::Array& v = query_graph(p, tape.constant(state), chunk).value();
    out.insert(out.end(), v.values().begin(), v.values().end());
  }
  return out;
}

std::vector<double> FamiliarityModel::logits(std::span<const Item> storage, std::span<const Item> queries) const {
  return query(write(storage), queries);
}

std::unique_ptr<FamiliarityModel> make_model(const ModelConfig& config, std::uint64_t seed) {
  switch (config.kind) {
    case ModelKind::nbf: return std::make_unique<NeuralBloomFilter>(config, seed);
    case ModelKind::lstm: return std::make_unique<baselines::LstmFamiliarityModel>(config, seed);
    case ModelKind::memnet: return std::make_unique<baselines::MemNetFamiliarityModel>(config, seed);
  }
  throw ConfigError("unknown model kind");
}

std::unique_ptr<FamiliarityModel> restore_model(const ModelConfig& config, diff::ParamStore params) {
  switch (config.kind) {
    case ModelKind::nbf: return std::make_unique<NeuralBloomFilter>(config, std::move(params));
    case ModelKind::lstm: return std::make_unique<baselines::LstmFamiliarityModel>(config, std::move(params));
    case ModelKind::memnet: return std::make_unique<baselines::MemNetFamiliarityModel>(config, std::move(params));
  }
  throw ConfigError("unknown model kind");
}

}  // namespace nbloom::model
