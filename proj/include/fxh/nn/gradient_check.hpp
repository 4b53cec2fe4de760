#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fxh/nn/tensor.hpp"

namespace fxh::nn {

struct LossEvaluation {
  double loss = 0.0;
  std::uint64_t relu_pattern = 0;  ///< see Tape::relu_pattern(); 0 when the model has no ReLUs

  /// Optional terms of a squared-error loss, loss = scale * sum (outputs - targets)^2.
  /// When present the checker differences the outputs instead of the two losses:
  /// L+ - L- = scale * sum (o+ - o-)(o+ + o- - 2t). That keeps the rounding of the
  /// loss value itself (about ulp(L) / 2h) out of the central difference.
  std::vector<double> outputs;
  std::vector<double> targets;
  double scale = 0.0;
};

using LossFn = std::function<LossEvaluation(const ParameterSet&)>;
using GradientFn = std::function<ParameterSet(const ParameterSet&)>;

struct GradientCheckOptions {
  double h = 1e-5;
  std::size_t coords_per_tensor = 200;  ///< tensors at most this large are checked exhaustively
  std::uint64_t seed = 7;
};

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-h probe changed the ReLU pattern and were replaced.
  std::size_t resampled = 0;
};

/// |a - b| / max(|a| + |b|, 1e-8)
double relative_error(double a, double b);

/// Compares the analytic gradient with central differences (L(p+h) - L(p-h)) / 2h.
/// Coordinates whose probes land on a different ReLU piece than the base point are
/// replaced by fresh random coordinates. Throws NumericError on a non-finite loss.
GradientCheckResult gradient_check(const LossFn& loss, const GradientFn& gradient, const ParameterSet& point,
                                   const GradientCheckOptions& options = {});

}  // namespace fxh::nn
