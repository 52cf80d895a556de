#pragma once

#include <string>

#include "nbloom/diff/ops.hpp"
#include "nbloom/diff/params.hpp"
#include "nbloom/rng.hpp"

namespace nbloom::diff {

// Dense layer "<name>/w" [in, out] and "<name>/b" [out], Glorot-uniform weights.
void init_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
Var linear(const Bindings& p, const std::string& name, Var x);

// Layer norm gain "<name>/gain" (ones) and bias "<name>/bias" (zeros).
void init_layer_norm(ParamStore& store, const std::string& name, std::size_t width);
Var layer_norm(const Bindings& p, const std::string& name, Var x);

// Scalar helpers built from the primitive set.
Var scale(Var x, double factor);
Var constant_like(Tape& tape, const Shape& shape, double value);

}  // namespace nbloom::diff
