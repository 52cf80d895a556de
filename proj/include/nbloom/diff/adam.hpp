#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nbloom/diff/params.hpp"

namespace nbloom::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update. Only parameters present in `grads` move.
// Throws if any gradient is non-finite; params and state are untouched then.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state);

}  // namespace nbloom::diff
