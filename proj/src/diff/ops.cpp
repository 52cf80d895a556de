#include "nbloom/diff/ops.hpp"

#include "nbloom/error.hpp"

namespace nbloom::diff {

namespace {

Var unary(Primitive op, Var x, OpAttrs attrs = {}) {
  return x.tape().apply(op, {x}, std::move(attrs));
}

Var binary(Primitive op, Var a, Var b, OpAttrs attrs = {}) {
  return a.tape().apply(op, {a, b}, std::move(attrs));
}

}  // namespace

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
  OpAttrs at;
  at.trans_a = trans_a;
  at.trans_b = trans_b;
  return binary(Primitive::matmul, a, b, std::move(at));
}

Var add(Var a, Var b) { return binary(Primitive::add, a, b); }

Var multiply(Var a, Var b) { return binary(Primitive::multiply, a, b); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat: no inputs");
  return parts.front().tape().apply(Primitive::concat, std::vector<Var>(parts.begin(), parts.end()));
}

Var leaky_relu(Var x, double slope) {
  OpAttrs at;
  at.slope = slope;
  return unary(Primitive::leaky_relu, x, std::move(at));
}

Var sigmoid(Var x) { return unary(Primitive::sigmoid, x); }

Var tanh(Var x) { return unary(Primitive::tanh, x); }

Var softmax(Var x) { return unary(Primitive::softmax, x); }

Var topk_softmax(Var x, std::size_t k) {
  OpAttrs at;
  at.k = k;
  return unary(Primitive::topk_softmax, x, std::move(at));
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  OpAttrs at;
  at.eps = eps;
  return x.tape().apply(Primitive::layer_norm, {x, gain, bias}, std::move(at));
}

Var outer_product(Var a, Var b) { return binary(Primitive::outer_product, a, b); }

Var flatten(Var x, Shape shape) {
  OpAttrs at;
  at.shape = std::move(shape);
  return unary(Primitive::flatten, x, std::move(at));
}

Var reduce_sum(Var x) { return unary(Primitive::reduce_sum, x); }

Var bce_loss(Var logits, Var labels) { return binary(Primitive::bce_loss, logits, labels); }

Var l2_normalize(Var x, double eps) {
  OpAttrs at;
  at.eps = eps;
  return unary(Primitive::l2_normalize, x, std::move(at));
}

Var reduce_max(Var x) { return unary(Primitive::reduce_max, x); }

Var select_rows(Var x, std::vector<std::size_t> rows) {
  OpAttrs at;
  at.indices = std::move(rows);
  return unary(Primitive::select_rows, x, std::move(at));
}

}  // namespace nbloom::diff
