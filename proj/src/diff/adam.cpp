#include "nbloom/diff/adam.hpp"

#include <cmath>

#include "nbloom/error.hpp"

namespace nbloom::diff {

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) throw Error("adam_step: non-finite gradient for " + name);
    if (g.shape() != params.get(name).shape()) {
      throw Error("adam_step: gradient shape " + shape_string(g.shape()) + " does not match " + name +
                  " " + shape_string(params.get(name).shape()));
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (const auto& [name, g] : grads) {
    Array& p = params.get(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, g.shape(), 0.0);
    auto [v_it, v_new] = state.second_moment.try_emplace(name, g.shape(), 0.0);
    Array& m = m_it->second;
    Array& v = v_it->second;
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace nbloom::diff
