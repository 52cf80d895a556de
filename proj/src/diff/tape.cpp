#include "nbloom/diff/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nbloom/error.hpp"

namespace nbloom::diff {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

[[noreturn]] void shape_error(Primitive op, const std::string& detail) {
  throw Error(std::string(primitive_name(op)) + ": " + detail);
}

std::string shapes_of(std::span<const Array* const> in) {
  std::string s;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) s += " x ";
    s += shape_string(in[i]->shape());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

Broadcast broadcast_shapes(Primitive op, const Shape& a, const Shape& b) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r, 1), pb(r, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(r - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(r - b.size()));
  bc.out.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      shape_error(op, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    bc.out[i] = std::max(pa[i], pb[i]);
  }
  auto strides = [&](const Shape& p) {
    std::vector<std::size_t> s(r, 0);
    std::size_t acc = 1;
    for (std::size_t i = r; i-- > 0;) {
      s[i] = p[i] == 1 ? 0 : acc;
      acc *= p[i];
    }
    return s;
  };
  bc.stride_a = strides(pa);
  bc.stride_b = strides(pb);
  return bc;
}

template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  const std::size_t n = shape_size(bc.out);
  if (bc.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  const std::size_t r = bc.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, oa, ob);
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      oa += bc.stride_a[ax];
      ob += bc.stride_b[ax];
      if (idx[ax] < bc.out[ax]) break;
      oa -= bc.stride_a[ax] * bc.out[ax];
      ob -= bc.stride_b[ax] * bc.out[ax];
      idx[ax] = 0;
    }
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Indices of the k largest entries, ordered by value (desc) then index (asc).
std::vector<std::size_t> top_indices(std::span<const double> row, std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    return row[a] > row[b] || (row[a] == row[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

// ---------------------------------------------------------------------------
// Forward rules

struct MatmulDims {
  std::size_t m, k, n;
};

MatmulDims matmul_dims(const Array& a, const Array& b, const OpAttrs& at) {
  if (a.rank() != 2 || b.rank() != 2) {
    shape_error(Primitive::matmul, "operands must be rank 2, got " + shape_string(a.shape()) +
                                       " x " + shape_string(b.shape()));
  }
  const std::size_t m = at.trans_a ? a.dim(1) : a.dim(0);
  const std::size_t ka = at.trans_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = at.trans_b ? b.dim(1) : b.dim(0);
  const std::size_t n = at.trans_b ? b.dim(0) : b.dim(1);
  if (ka != kb) {
    shape_error(Primitive::matmul, "inner dimensions differ: " + shape_string(a.shape()) +
                                       (at.trans_a ? "^T" : "") + " x " +
                                       shape_string(b.shape()) + (at.trans_b ? "^T" : ""));
  }
  return {m, ka, n};
}

ConstMap as_matrix(const Array& a) {
  return ConstMap(a.data(), static_cast<Eigen::Index>(a.dim(0)),
                  static_cast<Eigen::Index>(a.dim(1)));
}

MutMap as_matrix(Array& a) {
  return MutMap(a.data(), static_cast<Eigen::Index>(a.dim(0)), static_cast<Eigen::Index>(a.dim(1)));
}

// out = op(a) * op(b), accumulated when `accumulate` is set.
void gemm(const Array& a, bool ta, const Array& b, bool tb, Array& out, bool accumulate) {
  auto A = as_matrix(a);
  auto B = as_matrix(b);
  auto C = as_matrix(out);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate) {
      C.noalias() += lhs * rhs;
    } else {
      C.noalias() = lhs * rhs;
    }
  };
  if (!ta && !tb) run(A, B);
  else if (ta && !tb) run(A.transpose(), B);
  else if (!ta && tb) run(A, B.transpose());
  else run(A.transpose(), B.transpose());
}

Array forward_rule(Primitive op, const OpAttrs& at, std::span<const Array* const> in,
                   std::vector<double>& aux) {
  auto expect_inputs = [&](std::size_t n) {
    if (in.size() != n) {
      shape_error(op, "expected " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
    }
  };

  switch (op) {
    case Primitive::leaf:
      shape_error(op, "leaves are not computed");

    case Primitive::matmul: {
      expect_inputs(2);
      const auto d = matmul_dims(*in[0], *in[1], at);
      Array out(Shape{d.m, d.n});
      gemm(*in[0], at.trans_a, *in[1], at.trans_b, out, false);
      return out;
    }

    case Primitive::add:
    case Primitive::multiply: {
      expect_inputs(2);
      const Array& a = *in[0];
      const Array& b = *in[1];
      const auto bc = broadcast_shapes(op, a.shape(), b.shape());
      Array out(bc.out);
      if (op == Primitive::add) {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          out[i] = a[ia] + b[ib];
        });
      } else {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          out[i] = a[ia] * b[ib];
        });
      }
      return out;
    }

    case Primitive::concat: {
      if (in.empty()) shape_error(op, "no inputs");
      const Shape& first = in[0]->shape();
      if (first.empty()) shape_error(op, "cannot concatenate scalars");
      std::size_t total = 0;
      for (const Array* p : in) {
        const Shape& s = p->shape();
        if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin())) {
          shape_error(op, "leading axes differ: " + shapes_of(in));
        }
        total += s.back();
      }
      Shape out_shape = first;
      out_shape.back() = total;
      Array out(out_shape);
      const std::size_t rows = in[0]->outer_size();
      for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (const Array* p : in) {
          auto src = p->row(r);
          std::copy(src.begin(), src.end(), out.data() + r * total + offset);
          offset += src.size();
        }
      }
      return out;
    }

    case Primitive::leaky_relu: {
      expect_inputs(1);
      Array out = *in[0];
      for (double& v : out.values()) v = v >= 0 ? v : at.slope * v;
      return out;
    }

    case Primitive::sigmoid: {
      expect_inputs(1);
      Array out = *in[0];
      for (double& v : out.values()) v = sigmoid_scalar(v);
      return out;
    }

    case Primitive::tanh: {
      expect_inputs(1);
      Array out = *in[0];
      for (double& v : out.values()) v = std::tanh(v);
      return out;
    }

    case Primitive::softmax:
    case Primitive::topk_softmax: {
      expect_inputs(1);
      const Array& x = *in[0];
      const std::size_t width = x.last_dim();
      std::size_t k = width;
      if (op == Primitive::topk_softmax) {
        if (at.k == 0 || at.k > width) {
          shape_error(op, "k=" + std::to_string(at.k) + " outside [1, " + std::to_string(width) +
                              "] for input " + shape_string(x.shape()));
        }
        k = at.k;
      }
      Array out(x.shape(), 0.0);
      for (std::size_t r = 0; r < x.outer_size(); ++r) {
        auto src = x.row(r);
        auto dst = out.row(r);
        if (k == width) {
          const double mx = *std::max_element(src.begin(), src.end());
          double sum = 0.0;
          for (std::size_t j = 0; j < width; ++j) sum += dst[j] = std::exp(src[j] - mx);
          for (double& v : dst) v /= sum;
        } else {
          const auto keep = top_indices(src, k);
          const double mx = src[keep.front()];
          double sum = 0.0;
          for (auto j : keep) sum += dst[j] = std::exp(src[j] - mx);
          for (auto j : keep) dst[j] /= sum;
        }
      }
      return out;
    }

    case Primitive::layer_norm: {
      expect_inputs(3);
      const Array& x = *in[0];
      const Array& gain = *in[1];
      const Array& bias = *in[2];
      const std::size_t width = x.last_dim();
      if (gain.size() != width || bias.size() != width) {
        shape_error(op, "gain/bias must match last axis: " + shapes_of(in));
      }
      const std::size_t rows = x.outer_size();
      Array out(x.shape());
      // aux: normalized values followed by per-row inverse std.
      aux.assign(x.size() + rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        auto src = x.row(r);
        double mean = 0.0;
        for (double v : src) mean += v;
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (double v : src) var += (v - mean) * (v - mean);
        var /= static_cast<double>(width);
        const double inv_std = 1.0 / std::sqrt(var + at.eps);
        aux[x.size() + r] = inv_std;
        for (std::size_t j = 0; j < width; ++j) {
          const double xhat = (src[j] - mean) * inv_std;
          aux[r * width + j] = xhat;
          out[r * width + j] = gain[j] * xhat + bias[j];
        }
      }
      return out;
    }

    case Primitive::outer_product: {
      expect_inputs(2);
      const Array& a = *in[0];
      const Array& b = *in[1];
      if (a.rank() != 1 || b.rank() != 1) shape_error(op, "operands must be rank 1: " + shapes_of(in));
      Array out(Shape{a.size(), b.size()});
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out.at(i, j) = a[i] * b[j];
      }
      return out;
    }

    case Primitive::flatten: {
      expect_inputs(1);
      const Array& x = *in[0];
      Shape target = at.shape;
      if (target.empty()) {
        if (x.rank() == 0) shape_error(op, "cannot flatten a scalar");
        target = Shape{x.dim(0), x.size() / x.dim(0)};
      }
      if (shape_size(target) != x.size()) {
        shape_error(op, "cannot reshape " + shape_string(x.shape()) + " to " + shape_string(target));
      }
      return x.reshaped(std::move(target));
    }

    case Primitive::reduce_sum: {
      expect_inputs(1);
      double s = 0.0;
      for (double v : in[0]->values()) s += v;
      return Array::scalar(s);
    }

    case Primitive::bce_loss: {
      expect_inputs(2);
      const Array& x = *in[0];
      const Array& y = *in[1];
      if (x.size() != y.size()) shape_error(op, "logits and labels differ: " + shapes_of(in));
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        s += std::max(v, 0.0) - v * y[i] + std::log1p(std::exp(-std::abs(v)));
      }
      return Array::scalar(s / static_cast<double>(x.size()));
    }

    case Primitive::l2_normalize: {
      expect_inputs(1);
      const Array& x = *in[0];
      Array out(x.shape());
      aux.assign(x.outer_size(), 0.0);
      for (std::size_t r = 0; r < x.outer_size(); ++r) {
        auto src = x.row(r);
        double ss = 0.0;
        for (double v : src) ss += v * v;
        const double norm = std::sqrt(ss + at.eps);
        aux[r] = norm;
        auto dst = out.row(r);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norm;
      }
      return out;
    }

    case Primitive::reduce_max: {
      expect_inputs(1);
      const Array& x = *in[0];
      if (x.rank() == 0) shape_error(op, "cannot reduce a scalar");
      Shape out_shape(x.shape().begin(), x.shape().end() - 1);
      Array out(out_shape);
      aux.assign(x.outer_size(), 0.0);
      for (std::size_t r = 0; r < x.outer_size(); ++r) {
        auto src = x.row(r);
        const auto it = std::max_element(src.begin(), src.end());
        out[r] = *it;
        aux[r] = static_cast<double>(it - src.begin());
      }
      return out;
    }

    case Primitive::select_rows: {
      expect_inputs(1);
      const Array& x = *in[0];
      if (x.rank() != 2) shape_error(op, "input must be rank 2, got " + shape_string(x.shape()));
      if (at.indices.empty()) shape_error(op, "no rows selected");
      Array out(Shape{at.indices.size(), x.dim(1)});
      for (std::size_t i = 0; i < at.indices.size(); ++i) {
        if (at.indices[i] >= x.dim(0)) {
          shape_error(op, "row " + std::to_string(at.indices[i]) + " out of range for " +
                              shape_string(x.shape()));
        }
        auto src = x.row(at.indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
      }
      return out;
    }
  }
  shape_error(op, "unknown primitive");
}

// ---------------------------------------------------------------------------
// Adjoint rules. `gin[i]` is null when input i needs no gradient; otherwise
// the rule accumulates into it.

void adjoint_rule(const Node& node, const Array& g, std::span<const Array* const> in,
                  std::span<Array* const> gin) {
  const OpAttrs& at = node.attrs;
  const Array& y = node.value;
  switch (node.op) {
    case Primitive::leaf:
      return;

    case Primitive::matmul: {
      // C = op(A) op(B)
      const Array& a = *in[0];
      const Array& b = *in[1];
      if (gin[0]) {
        // dop(A) = dC op(B)^T; dA = dop(A) or its transpose.
        if (!at.trans_a) gemm(g, false, b, !at.trans_b, *gin[0], true);
        else gemm(b, at.trans_b, g, true, *gin[0], true);
      }
      if (gin[1]) {
        // dop(B) = op(A)^T dC
        if (!at.trans_b) gemm(a, !at.trans_a, g, false, *gin[1], true);
        else gemm(g, true, a, at.trans_a, *gin[1], true);
      }
      return;
    }

    case Primitive::add:
    case Primitive::multiply: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const auto bc = broadcast_shapes(node.op, a.shape(), b.shape());
      if (node.op == Primitive::add) {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          if (gin[0]) (*gin[0])[ia] += g[i];
          if (gin[1]) (*gin[1])[ib] += g[i];
        });
      } else {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          if (gin[0]) (*gin[0])[ia] += g[i] * b[ib];
          if (gin[1]) (*gin[1])[ib] += g[i] * a[ia];
        });
      }
      return;
    }

    case Primitive::concat: {
      const std::size_t total = y.last_dim();
      const std::size_t rows = y.outer_size();
      std::size_t offset = 0;
      for (std::size_t p = 0; p < in.size(); ++p) {
        const std::size_t w = in[p]->last_dim();
        if (gin[p]) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < w; ++j) (*gin[p])[r * w + j] += g[r * total + offset + j];
          }
        }
        offset += w;
      }
      return;
    }

    case Primitive::leaky_relu: {
      const Array& x = *in[0];
      for (std::size_t i = 0; i < x.size(); ++i) (*gin[0])[i] += x[i] >= 0 ? g[i] : at.slope * g[i];
      return;
    }

    case Primitive::sigmoid: {
      for (std::size_t i = 0; i < y.size(); ++i) (*gin[0])[i] += g[i] * y[i] * (1.0 - y[i]);
      return;
    }

    case Primitive::tanh: {
      for (std::size_t i = 0; i < y.size(); ++i) (*gin[0])[i] += g[i] * (1.0 - y[i] * y[i]);
      return;
    }

    case Primitive::softmax:
    case Primitive::topk_softmax: {
      // Dropped components have y = 0, so the dense rule zeroes them.
      const std::size_t width = y.last_dim();
      for (std::size_t r = 0; r < y.outer_size(); ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < width; ++j) dot += g[r * width + j] * y[r * width + j];
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t i = r * width + j;
          (*gin[0])[i] += y[i] * (g[i] - dot);
        }
      }
      return;
    }

    case Primitive::layer_norm: {
      const Array& x = *in[0];
      const Array& gain = *in[1];
      const std::size_t width = x.last_dim();
      const std::size_t rows = x.outer_size();
      const double n = static_cast<double>(width);
      for (std::size_t r = 0; r < rows; ++r) {
        const double inv_std = node.aux[x.size() + r];
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t i = r * width + j;
          const double xhat = node.aux[i];
          const double d = g[i] * gain[j];
          sum_d += d;
          sum_dx += d * xhat;
          if (gin[1]) (*gin[1])[j] += g[i] * xhat;
          if (gin[2]) (*gin[2])[j] += g[i];
        }
        if (gin[0]) {
          for (std::size_t j = 0; j < width; ++j) {
            const std::size_t i = r * width + j;
            const double d = g[i] * gain[j];
            (*gin[0])[i] += inv_std / n * (n * d - sum_d - node.aux[i] * sum_dx);
          }
        }
      }
      return;
    }

    case Primitive::outer_product: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
          const double gij = g.at(i, j);
          if (gin[0]) (*gin[0])[i] += gij * b[j];
          if (gin[1]) (*gin[1])[j] += gij * a[i];
        }
      }
      return;
    }

    case Primitive::flatten: {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
      return;
    }

    case Primitive::reduce_sum: {
      const double s = g.item();
      for (double& v : gin[0]->values()) v += s;
      return;
    }

    case Primitive::bce_loss: {
      const Array& x = *in[0];
      const Array& lbl = *in[1];
      const double scale = g.item() / static_cast<double>(x.size());
      if (gin[0]) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          (*gin[0])[i] += scale * (sigmoid_scalar(x[i]) - lbl[i]);
        }
      }
      if (gin[1]) {
        for (std::size_t i = 0; i < x.size(); ++i) (*gin[1])[i] += -scale * x[i];
      }
      return;
    }

    case Primitive::l2_normalize: {
      const std::size_t width = y.last_dim();
      for (std::size_t r = 0; r < y.outer_size(); ++r) {
        const double norm = node.aux[r];
        double dot = 0.0;
        for (std::size_t j = 0; j < width; ++j) dot += g[r * width + j] * y[r * width + j];
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t i = r * width + j;
          (*gin[0])[i] += (g[i] - y[i] * dot) / norm;
        }
      }
      return;
    }

    case Primitive::reduce_max: {
      const std::size_t width = in[0]->last_dim();
      for (std::size_t r = 0; r < node.aux.size(); ++r) {
        (*gin[0])[r * width + static_cast<std::size_t>(node.aux[r])] += g[r];
      }
      return;
    }

    case Primitive::select_rows: {
      const std::size_t width = in[0]->last_dim();
      for (std::size_t i = 0; i < at.indices.size(); ++i) {
        const std::size_t src = at.indices[i];
        for (std::size_t j = 0; j < width; ++j) (*gin[0])[src * width + j] += g[i * width + j];
      }
      return;
    }
  }
}

}  // namespace

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::leaf: return "leaf";
    case Primitive::matmul: return "matmul";
    case Primitive::add: return "add";
    case Primitive::multiply: return "multiply";
    case Primitive::concat: return "concat";
    case Primitive::leaky_relu: return "leaky_relu";
    case Primitive::sigmoid: return "sigmoid";
    case Primitive::tanh: return "tanh";
    case Primitive::softmax: return "softmax";
    case Primitive::topk_softmax: return "topk_softmax";
    case Primitive::layer_norm: return "layer_norm";
    case Primitive::outer_product: return "outer_product";
    case Primitive::flatten: return "flatten";
    case Primitive::reduce_sum: return "reduce_sum";
    case Primitive::bce_loss: return "bce_loss";
    case Primitive::l2_normalize: return "l2_normalize";
    case Primitive::reduce_max: return "reduce_max";
    case Primitive::select_rows: return "select_rows";
  }
  return "unknown";
}

const Array& Var::value() const { return tape_->value(id_); }
const Array& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Array value, std::string name) {
  Node n;
  n.value = std::move(value);
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::variable(Array value, std::string name) {
  Var v = constant(std::move(value), std::move(name));
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::apply(Primitive op, std::vector<Var> inputs, OpAttrs attrs) {
  Node n;
  n.op = op;
  n.attrs = std::move(attrs);
  std::vector<const Array*> in;
  in.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw Error(std::string(primitive_name(op)) + ": input from another tape");
    n.inputs.push_back(v.id());
    in.push_back(&nodes_[v.id()].value);
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  n.value = forward_rule(op, n.attrs, in, n.aux);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

const Array& Tape::grad(NodeId id) const {
  if (!has_grad(id)) throw Error("no gradient recorded for node " + std::to_string(id));
  return grads_[id];
}

void Tape::backward(Var loss, double loss_adjoint) {
  const Node& root = nodes_.at(loss.id());
  if (root.value.size() != 1 || root.value.rank() != 0) {
    throw Error("backward: loss must be a scalar, got shape " + shape_string(root.value.shape()));
  }
  grads_.assign(nodes_.size(), Array());
  has_grad_.assign(nodes_.size(), false);
  auto ensure = [&](NodeId id) -> Array& {
    if (!has_grad_[id]) {
      grads_[id] = Array(nodes_[id].value.shape(), 0.0);
      has_grad_[id] = true;
    }
    return grads_[id];
  };
  ensure(loss.id())[0] = loss_adjoint;

  std::vector<const Array*> in;
  std::vector<Array*> gin;
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!has_grad_[id] || node.op == Primitive::leaf || !node.requires_grad) continue;
    in.clear();
    gin.clear();
    for (NodeId src : node.inputs) {
      in.push_back(&nodes_[src].value);
      gin.push_back(nodes_[src].requires_grad ? &ensure(src) : nullptr);
    }
    adjoint_rule(node, grads_[id], in, gin);
  }
}

std::vector<Array> Tape::replay() const {
  std::vector<Array> values;
  values.reserve(nodes_.size());
  std::vector<const Array*> in;
  std::vector<double> aux;
  for (const Node& node : nodes_) {
    if (node.op == Primitive::leaf) {
      values.push_back(node.value);
      continue;
    }
    in.clear();
    for (NodeId src : node.inputs) in.push_back(&values[src]);
    values.push_back(forward_rule(node.op, node.attrs, in, aux));
  }
  return values;
}

}  // namespace nbloom::diff
