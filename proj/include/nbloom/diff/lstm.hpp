#pragma once

#include <string>

#include "nbloom/diff/layers.hpp"

namespace nbloom::diff {

struct LstmState {
  Var h;
  Var c;
};

// Gate parameters "<name>/{i,f,g,o}/{wx,wh,b}": input, forget, output gates
// are sigmoids; the candidate g is tanh.
//   c' = f * c + i * g,  h' = o * tanh(c')
void init_lstm(ParamStore& store, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);
LstmState lstm_cell(const Bindings& p, const std::string& name, Var x, LstmState state);
LstmState lstm_zero_state(Tape& tape, std::size_t rows, std::size_t hidden);

}  // namespace nbloom::diff
