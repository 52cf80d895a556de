#include "nbloom/model/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "nbloom/diff/lstm.hpp"
#include "nbloom/error.hpp"
#include "nbloom/hash.hpp"

namespace nbloom::model {

using diff::Array;
using diff::Var;

namespace {

constexpr std::size_t kCharVocab = 128;

const std::string& text_of(const Item& item) {
  const auto* s = std::get_if<std::string>(&item);
  if (!s) throw DataError("encoder: expected a byte-string item, got a dense vector");
  return *s;
}

const std::vector<double>& dense_of(const Item& item) {
  const auto* v = std::get_if<std::vector<double>>(&item);
  if (!v) throw DataError("encoder: expected a dense vector item, got a byte string");
  return *v;
}

}  // namespace

void trigram_features(std::string_view s, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::string padded;
  padded.reserve(s.size() + 4);
  padded.append("^^");
  padded.append(s);
  padded.append("$$");
  double norm2 = 0.0;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const auto h = hash_bytes(std::string_view(padded).substr(i, 3), 0x7219a3c5ULL);
    out[h % out.size()] += 1.0;
  }
  for (double v : out) norm2 += v * v;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
}

Encoder::Encoder(EncoderConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  config_.validate();
}

void Encoder::init(diff::ParamStore& store, Rng& rng) const {
  switch (config_.kind) {
    case EncoderKind::mlp:
    case EncoderKind::trigram: {
      const std::size_t in = config_.kind == EncoderKind::mlp ? config_.input_dim : config_.buckets;
      diff::init_linear(store, prefix_ + "/l1", in, config_.hidden, rng);
      diff::init_linear(store, prefix_ + "/l2", config_.hidden, config_.hidden, rng);
      break;
    }
    case EncoderKind::char_lstm:
      diff::init_lstm(store, prefix_ + "/lstm", kCharVocab, config_.hidden, rng);
      break;
  }
}

Array Encoder::features(std::span<const Item> items) const {
  if (items.empty()) throw DataError("encoder: empty item batch");
  if (config_.kind == EncoderKind::mlp) {
    Array x({items.size(), config_.input_dim});
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& v = dense_of(items[i]);
      if (v.size() != config_.input_dim) {
        throw DataError("encoder: item has " + std::to_string(v.size()) + " features, expected " +
                        std::to_string(config_.input_dim));
      }
      std::copy(v.begin(), v.end(), x.row(i).begin());
    }
    return x;
  }
  if (config_.kind == EncoderKind::trigram) {
    Array x({items.size(), config_.buckets});
    for (std::size_t i = 0; i < items.size(); ++i) trigram_features(text_of(items[i]), x.row(i));
    return x;
  }
  throw ConfigError("encoder: char_lstm has no flat feature view");
}

Var Encoder::encode(const diff::Bindings& p, std::span<const Item> items) const {
  if (config_.kind == EncoderKind::char_lstm) return encode_chars(p, items);
  Var x = p.tape().constant(features(items));
  Var h = diff::leaky_relu(diff::linear(p, prefix_ + "/l1", x));
  return diff::leaky_relu(diff::linear(p, prefix_ + "/l2", h));
}

// All items advance in lockstep; rows whose string has ended keep their state
// through a 0/1 mask.
Var Encoder::encode_chars(const diff::Bindings& p, std::span<const Item> items) const {
  if (items.empty()) throw DataError("encoder: empty item batch");
  diff::Tape& tape = p.tape();
  const std::size_t n = items.size();
  std::size_t steps = 1;
  for (const Item& it : items) steps = std::max(steps, std::min(text_of(it).size(), config_.max_chars));
  auto state = diff::lstm_zero_state(tape, n, config_.hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    Array onehot({n, kCharVocab});
    Array keep({n, 1});
    Array drop({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& s = text_of(items[i]);
      const bool active = t < std::min(s.size(), config_.max_chars);
      if (active) onehot.at(i, static_cast<unsigned char>(s[t]) & 0x7f) = 1.0;
      keep[i] = active ? 1.0 : 0.0;
      drop[i] = active ? 0.0 : 1.0;
    }
    auto next = diff::lstm_cell(p, prefix_ + "/lstm", tape.constant(std::move(onehot)), state);
    Var k = tape.constant(std::move(keep));
    Var d = tape.constant(std::move(drop));
    state.h = diff::add(diff::multiply(next.h, k), diff::multiply(state.h, d));
    state.c = diff::add(diff::multiply(next.c, k), diff::multiply(state.c, d));
  }
  return state.h;
}

}  // namespace nbloom::model
