#pragma once

#include <span>
#include <vector>

#include "nbloom/diff/tape.hpp"

namespace nbloom::diff {

Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
// Elementwise with numpy-style broadcasting (shapes aligned on the right).
Var add(Var a, Var b);
Var multiply(Var a, Var b);
// Concatenates along the last axis; all other axes must agree.
Var concat(std::span<const Var> parts);
Var leaky_relu(Var x, double slope = 0.01);
Var sigmoid(Var x);
Var tanh(Var x);
// Softmax variants normalize over the last axis.
Var softmax(Var x);
// Keeps the k largest logits per row (ties to the lowest index), renormalized.
Var topk_softmax(Var x, std::size_t k);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var outer_product(Var a, Var b);
Var flatten(Var x, Shape shape = {});
Var reduce_sum(Var x);
// Mean binary cross-entropy of sigmoid(logits) against constant labels.
Var bce_loss(Var logits, Var labels);
Var l2_normalize(Var x, double eps = 1e-12);
// Maximum over the last axis.
Var reduce_max(Var x);
Var select_rows(Var x, std::vector<std::size_t> rows);

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

}  // namespace nbloom::diff
