#include "nbloom/model/config.hpp"

#include "nbloom/error.hpp"

namespace nbloom::model {

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::mlp: return "mlp";
    case EncoderKind::trigram: return "trigram";
    case EncoderKind::char_lstm: return "char_lstm";
  }
  return "?";
}

std::string to_string(AddressMode m) {
  switch (m) {
    case AddressMode::trainable: return "trainable";
    case AddressMode::gaussian_fixed: return "gaussian_fixed";
    case AddressMode::seeded: return "seeded";
  }
  return "?";
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::nbf: return "nbf";
    case ModelKind::lstm: return "lstm";
    case ModelKind::memnet: return "memnet";
  }
  return "?";
}

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "mlp") return EncoderKind::mlp;
  if (s == "trigram") return EncoderKind::trigram;
  if (s == "char_lstm") return EncoderKind::char_lstm;
  throw ConfigError("unknown encoder kind '" + s + "'");
}

AddressMode parse_address_mode(const std::string& s) {
  if (s == "trainable") return AddressMode::trainable;
  if (s == "gaussian_fixed") return AddressMode::gaussian_fixed;
  if (s == "seeded") return AddressMode::seeded;
  throw ConfigError("unknown address mode '" + s + "'");
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "nbf") return ModelKind::nbf;
  if (s == "lstm") return ModelKind::lstm;
  if (s == "memnet") return ModelKind::memnet;
  throw ConfigError("unknown model kind '" + s + "'");
}

void EncoderConfig::validate() const {
  if (hidden == 0) throw ConfigError("encoder.hidden must be >= 1");
  if (kind == EncoderKind::mlp && input_dim == 0) throw ConfigError("encoder.input_dim must be >= 1");
  if (kind == EncoderKind::trigram && buckets == 0) throw ConfigError("encoder.buckets must be >= 1");
  if (kind == EncoderKind::char_lstm && max_chars == 0) throw ConfigError("encoder.max_chars must be >= 1");
}

void ZcaConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("nbf.zca_gamma must lie in [0, 1)");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("nbf.zca_eta must lie in [0, 1]");
  if (period == 0) throw ConfigError("nbf.zca_period must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("nbf.zca_epsilon must be > 0");
}

void NbfConfig::validate() const {
  if (slots == 0) throw ConfigError("nbf.m_slots must be >= 1");
  if (word_size == 0) throw ConfigError("nbf.d_w must be >= 1");
  if (query_dim == 0) throw ConfigError("nbf.d_q must be >= 1");
  if (hidden == 0) throw ConfigError("nbf.hidden must be >= 1");
  if (k_addr > slots) {
    throw ConfigError("nbf.k_addr (" + std::to_string(k_addr) + ") exceeds nbf.m_slots (" +
                      std::to_string(slots) + ")");
  }
  zca.validate();
}

void LstmConfig::validate() const {
  if (hidden == 0) throw ConfigError("lstm.hidden must be >= 1");
  if (query_hidden == 0) throw ConfigError("lstm.query_hidden must be >= 1");
  if (max_unroll == 0) throw ConfigError("lstm.max_unroll must be >= 1");
}

void MemNetConfig::validate() const {
  if (word_size == 0) throw ConfigError("memnet.d_w must be >= 1");
}

void ModelConfig::validate() const {
  encoder.validate();
  nbf.validate();
  lstm.validate();
  memnet.validate();
}

}  // namespace nbloom::model
