#include "fxh/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace fxh::nn {

AdamState AdamState::for_parameters(const ParameterSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state, const AdamConfig& cfg) {
  if (!params.compatible_with(grads) || !params.compatible_with(state.m) || !params.compatible_with(state.v))
    throw std::invalid_argument("adam_update: parameter, gradient and state shapes differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i].data;
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void sgd_update(ParameterSet& params, const ParameterSet& grads, double learning_rate) {
  if (!params.compatible_with(grads)) throw std::invalid_argument("sgd_update: shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i].data;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * g[k];
  }
}

}  // namespace fxh::nn
