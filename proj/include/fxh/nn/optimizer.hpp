#pragma once

#include <cstdint>

#include "fxh/nn/tensor.hpp"

namespace fxh::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;

  static AdamState for_parameters(const ParameterSet& params);
};

/// One bias-corrected Adam step. Coordinates with zero first and second moments stay put.
void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state, const AdamConfig& cfg);

/// params -= lr * grads
void sgd_update(ParameterSet& params, const ParameterSet& grads, double learning_rate);

}  // namespace fxh::nn
