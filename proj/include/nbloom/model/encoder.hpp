#pragma once

#include <span>
#include <string>

#include "nbloom/diff/layers.hpp"
#include "nbloom/model/config.hpp"
#include "nbloom/tasks/dataset.hpp"

namespace nbloom::model {

using tasks::Item;

// Maps a batch of items to embeddings z, one row per item.
//   mlp:       dense vector -> leaky(L1) -> leaky(L2)
//   trigram:   hashed character-trigram bag -> leaky(L1) -> leaky(L2)
//   char_lstm: byte sequence -> LSTM, final hidden state
class Encoder {
 public:
  Encoder(EncoderConfig config, std::string prefix);

  void init(diff::ParamStore& store, Rng& rng) const;
  diff::Var encode(const diff::Bindings& p, std::span<const Item> items) const;
  std::size_t output_dim() const { return config_.hidden; }
  const EncoderConfig& config() const { return config_; }

  // Raw input rows for the mlp/trigram kinds (exposed for tests).
  diff::Array features(std::span<const Item> items) const;

 private:
  diff::Var encode_chars(const diff::Bindings& p, std::span<const Item> items) const;

  EncoderConfig config_;
  std::string prefix_;
};

// Hashed trigram counts over "^^" + s + "$$", scaled to unit L2 norm.
void trigram_features(std::string_view s, std::span<double> out);

}  // namespace nbloom::model
