#pragma once

#include <functional>

#include "nbloom/diff/params.hpp"
#include "nbloom/diff/tape.hpp"

namespace nbloom::diff {

// Builds a scalar on the given tape from the variable `x`.
using ScalarGraph = std::function<Var(Tape&, Var x)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Compares the tape gradient of f at x against central differences:
// max over coordinates of |analytic - numeric| / (|numeric| + tol).
// Throws if f evaluates to a non-finite value anywhere.
GradCheckResult finite_diff_check(const ScalarGraph& f, const Array& x, double eps = 1e-5,
                                  double tol = 1e-6);

// Same comparison over every trainable entry of a ParamStore. `loss` builds
// the scalar from bound parameters; at most `max_coords` coordinates per
// array are probed (evenly strided) to keep large models cheap.
using ParamGraph = std::function<Var(const Bindings&)>;

GradCheckResult param_finite_diff_check(const ParamGraph& loss, const ParamStore& params,
                                        double eps = 1e-5, double tol = 1e-6,
                                        std::size_t max_coords = 64);

}  // namespace nbloom::diff
