#include "nbloom/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nbloom/error.hpp"

namespace nbloom::diff {

namespace {

double evaluate(const ScalarGraph& f, const Array& x) {
  Tape tape;
  Var out = f(tape, tape.constant(x));
  const double v = out.value().item();
  if (!std::isfinite(v)) throw Error("finite_diff_check: non-finite evaluation");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(const ScalarGraph& f, const Array& x, double eps, double tol) {
  Tape tape;
  Var xv = tape.variable(x, "x");
  Var out = f(tape, xv);
  if (!std::isfinite(out.value().item())) throw Error("finite_diff_check: non-finite evaluation");
  tape.backward(out);
  Array analytic = tape.has_grad(xv.id()) ? tape.grad(xv.id()) : Array(x.shape(), 0.0);

  GradCheckResult result;
  Array probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(f, probe);
    probe[i] = x[i] - eps;
    const double down = evaluate(f, probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / (std::abs(numeric) + tol);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

GradCheckResult param_finite_diff_check(const ParamGraph& loss, const ParamStore& params,
                                        double eps, double tol, std::size_t max_coords) {
  auto evaluate_at = [&](const ParamStore& store) {
    Tape tape;
    Bindings b(tape, store);
    const double v = loss(b).value().item();
    if (!std::isfinite(v)) throw Error("finite_diff_check: non-finite evaluation");
    return v;
  };

  Tape tape;
  Bindings bound(tape, params);
  Var out = loss(bound);
  tape.backward(out);
  const Gradients analytic = bound.gradients();

  GradCheckResult result;
  ParamStore probe = params;
  std::size_t flat_offset = 0;
  for (const auto& [name, g] : analytic) {
    Array& p = probe.get(name);
    const std::size_t stride = std::max<std::size_t>(1, p.size() / max_coords);
    for (std::size_t i = 0; i < p.size(); i += stride) {
      const double x0 = p[i];
      p[i] = x0 + eps;
      const double up = evaluate_at(probe);
      p[i] = x0 - eps;
      const double down = evaluate_at(probe);
      p[i] = x0;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(g[i] - numeric) / (std::abs(numeric) + tol);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_index = flat_offset + i;
      }
    }
    flat_offset += p.size();
  }
  return result;
}

}  // namespace nbloom::diff
