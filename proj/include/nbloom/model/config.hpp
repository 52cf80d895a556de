#pragma once

#include <cstddef>
#include <string>

namespace nbloom::model {

enum class EncoderKind { mlp, trigram, char_lstm };
enum class AddressMode { trainable, gaussian_fixed, seeded };
enum class ModelKind { nbf, lstm, memnet };

std::string to_string(EncoderKind k);
std::string to_string(AddressMode m);
std::string to_string(ModelKind k);
EncoderKind parse_encoder_kind(const std::string& s);
AddressMode parse_address_mode(const std::string& s);
ModelKind parse_model_kind(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::mlp;
  std::size_t input_dim = 16;   // dense feature width
  std::size_t hidden = 128;     // output embedding width
  std::size_t buckets = 512;    // trigram hash buckets
  std::size_t max_chars = 32;   // char_lstm truncation
  void validate() const;
};

struct ZcaConfig {
  double gamma = 0.99;
  double eta = 0.99;
  std::size_t period = 100;
  double epsilon = 1e-5;
  void validate() const;
};

struct NbfConfig {
  std::size_t slots = 10;
  std::size_t word_size = 2;
  std::size_t query_dim = 32;
  std::size_t hidden = 128;
  AddressMode address_mode = AddressMode::trainable;
  std::size_t k_addr = 0;  // 0 = dense softmax addressing
  bool sphering = false;
  ZcaConfig zca;
  void validate() const;
  bool sparse() const { return k_addr != 0 && k_addr < slots; }
};

struct LstmConfig {
  std::size_t hidden = 32;
  std::size_t query_hidden = 128;
  std::size_t max_unroll = 1000;
  bool allow_long_unroll = false;
  void validate() const;
};

struct MemNetConfig {
  std::size_t word_size = 2;
  void validate() const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::nbf;
  EncoderConfig encoder;
  NbfConfig nbf;
  LstmConfig lstm;
  MemNetConfig memnet;
  void validate() const;
};

}  // namespace nbloom::model
