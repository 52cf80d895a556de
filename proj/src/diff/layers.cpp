#include "nbloom/diff/layers.hpp"

#include <cmath>

namespace nbloom::diff {

void init_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Array w(Shape{in, out});
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  store.set(name + "/w", std::move(w));
  store.set(name + "/b", Array(Shape{out}, 0.0));
}

Var linear(const Bindings& p, const std::string& name, Var x) {
  return add(matmul(x, p[name + "/w"]), p[name + "/b"]);
}

void init_layer_norm(ParamStore& store, const std::string& name, std::size_t width) {
  store.set(name + "/gain", Array(Shape{width}, 1.0));
  store.set(name + "/bias", Array(Shape{width}, 0.0));
}

Var layer_norm(const Bindings& p, const std::string& name, Var x) {
  return layer_norm(x, p[name + "/gain"], p[name + "/bias"]);
}

Var scale(Var x, double factor) { return multiply(x, x.tape().constant(Array::scalar(factor))); }

Var constant_like(Tape& tape, const Shape& shape, double value) {
  return tape.constant(Array(shape, value));
}

}  // namespace nbloom::diff
