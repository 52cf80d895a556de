#include "nbloom/diff/lstm.hpp"

#include <cmath>

namespace nbloom::diff {

namespace {

constexpr const char* kGates[] = {"i", "f", "g", "o"};

}  // namespace

void init_lstm(ParamStore& store, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng) {
  const double limit_x = std::sqrt(6.0 / static_cast<double>(input + hidden));
  const double limit_h = std::sqrt(6.0 / static_cast<double>(2 * hidden));
  for (const char* gate : kGates) {
    const std::string base = name + "/" + gate;
    Array wx(Shape{input, hidden});
    for (double& v : wx.values()) v = rng.uniform(-limit_x, limit_x);
    Array wh(Shape{hidden, hidden});
    for (double& v : wh.values()) v = rng.uniform(-limit_h, limit_h);
    store.set(base + "/wx", std::move(wx));
    store.set(base + "/wh", std::move(wh));
    // Forget-gate bias starts at 1 so early training keeps the cell state.
    store.set(base + "/b", Array(Shape{hidden}, std::string(gate) == "f" ? 1.0 : 0.0));
  }
}

LstmState lstm_cell(const Bindings& p, const std::string& name, Var x, LstmState state) {
  auto pre = [&](const char* gate) {
    const std::string base = name + "/" + gate;
    return add(add(matmul(x, p[base + "/wx"]), matmul(state.h, p[base + "/wh"])), p[base + "/b"]);
  };
  Var i = sigmoid(pre("i"));
  Var f = sigmoid(pre("f"));
  Var g = tanh(pre("g"));
  Var o = sigmoid(pre("o"));
  Var c = add(multiply(f, state.c), multiply(i, g));
  Var h = multiply(o, tanh(c));
  return {h, c};
}

LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden) {
  return {tape.constant(Array(Shape{rows, hidden}, 0.0)), tape.constant(Array(Shape{rows, hidden}, 0.0))};
}

}  // namespace nbloom::diff
