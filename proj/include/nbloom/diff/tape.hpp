#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbloom/diff/array.hpp"

namespace nbloom::diff {

enum class Primitive : std::uint8_t {
  leaf,
  matmul,
  add,
  multiply,
  concat,
  leaky_relu,
  sigmoid,
  tanh,
  softmax,
  topk_softmax,
  layer_norm,
  outer_product,
  flatten,
  reduce_sum,
  bce_loss,
  // Needed by the memory-network and LSTM baselines.
  l2_normalize,
  reduce_max,
  select_rows,
};

std::string_view primitive_name(Primitive p);

struct OpAttrs {
  double slope = 0.01;        // leaky_relu
  std::size_t k = 0;          // topk_softmax
  bool trans_a = false;       // matmul
  bool trans_b = false;       // matmul
  double eps = 1e-5;          // layer_norm, l2_normalize
  Shape shape;                // flatten target (empty: collapse to [dim0, rest])
  std::vector<std::size_t> indices;  // select_rows
};

using NodeId = std::uint32_t;

struct Node {
  Primitive op = Primitive::leaf;
  std::vector<NodeId> inputs;
  OpAttrs attrs;
  Array value;
  std::vector<double> aux;  // per-op saved state for the adjoint
  bool requires_grad = false;
  std::string name;  // leaves only
};

class Tape;

// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  const Array& grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Records primitive applications in execution order. Execution is eager: each
// apply() computes its output immediately, so the tape is topologically ordered
// by construction. backward() runs the exact adjoint of every primitive in
// reverse order.
class Tape {
 public:
  Var constant(Array value, std::string name = {});
  Var variable(Array value, std::string name = {});
  Var apply(Primitive op, std::vector<Var> inputs, OpAttrs attrs = {});

  const Array& value(NodeId id) const { return nodes_.at(id).value; }
  const Array& grad(NodeId id) const;
  bool has_grad(NodeId id) const { return id < has_grad_.size() && has_grad_[id]; }

  // Reverse pass from a scalar node. Throws if `loss` is not a scalar.
  void backward(Var loss, double loss_adjoint = 1.0);

  // Re-executes every derived node from the stored leaf values.
  std::vector<Array> replay() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }

 private:
  std::vector<Node> nodes_;
  std::vector<Array> grads_;
  std::vector<bool> has_grad_;
};

}  // namespace nbloom::diff
