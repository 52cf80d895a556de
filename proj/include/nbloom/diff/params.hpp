#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nbloom/diff/array.hpp"
#include "nbloom/diff/tape.hpp"

namespace nbloom::diff {

// Named real arrays. Names beginning with "const/" are persisted with the
// model but never trained (fixed address matrices, sphering state).
class ParamStore {
 public:
  using Map = std::map<std::string, Array>;

  static bool is_trainable_name(const std::string& name) { return name.rfind("const/", 0) != 0; }

  void set(const std::string& name, Array value) { arrays_[name] = std::move(value); }
  const Array& get(const std::string& name) const;
  Array& get(const std::string& name);
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  void erase(const std::string& name) { arrays_.erase(name); }

  const Map& arrays() const noexcept { return arrays_; }
  Map& arrays() noexcept { return arrays_; }

  // Total number of trainable scalar values.
  std::size_t trainable_count() const;
  std::size_t total_count() const;

  std::vector<std::uint8_t> serialize() const;
  static ParamStore deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

  bool operator==(const ParamStore& other) const = default;

 private:
  Map arrays_;
};

using Gradients = std::map<std::string, Array>;

// Tape leaves for every entry of a ParamStore: trainable entries become
// variables, "const/" entries become constants.
class Bindings {
 public:
  Bindings(Tape& tape, const ParamStore& params);

  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  Tape& tape() const { return *tape_; }

  // Gradients of trainable parameters after tape.backward(); parameters that
  // did not influence the loss get zeros.
  Gradients gradients() const;

 private:
  Tape* tape_;
  const ParamStore* params_;
  std::map<std::string, Var> vars_;
};

void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);
double global_norm(const Gradients& g);
// Rescales so the global norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(Gradients& g, double max_norm);

}  // namespace nbloom::diff
