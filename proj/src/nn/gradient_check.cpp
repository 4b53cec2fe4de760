#include "fxh/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fxh/errors.hpp"

namespace fxh::nn {

namespace {

double loss_difference(const LossEvaluation& plus, const LossEvaluation& minus) {
  if (plus.outputs.empty() || plus.outputs.size() != minus.outputs.size() ||
      plus.targets.size() != plus.outputs.size())
    return plus.loss - minus.loss;
  double acc = 0.0;
  for (std::size_t i = 0; i < plus.outputs.size(); ++i) {
    const double o1 = plus.outputs[i], o2 = minus.outputs[i];
    acc += (o1 - o2) * ((o1 - plus.targets[i]) + (o2 - plus.targets[i]));
  }
  return plus.scale * acc;
}

}  // namespace

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-8);
}

GradientCheckResult gradient_check(const LossFn& loss, const GradientFn& gradient, const ParameterSet& point,
                                   const GradientCheckOptions& options) {
  auto checked_loss = [&](const ParameterSet& p) {
    const LossEvaluation e = loss(p);
    if (!std::isfinite(e.loss)) throw NumericError("gradient_check: non-finite loss");
    return e;
  };
  const LossEvaluation base = checked_loss(point);
  const ParameterSet analytic = gradient(point);
  if (!analytic.compatible_with(point)) throw std::invalid_argument("gradient_check: gradient shape mismatch");

  GradientCheckResult result;
  ParameterSet probe = point;
  Rng rng(options.seed);

  for (std::size_t t = 0; t < point.size(); ++t) {
    const std::size_t n = point[t].size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with raw draws; small tensors keep their natural order.
    if (n > options.coords_per_tensor) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    }
    const std::size_t want = std::min(n, options.coords_per_tensor);
    std::size_t done = 0;
    for (std::size_t pos = 0; pos < n && done < want; ++pos) {
      const std::size_t k = order[pos];
      double& slot = probe[t].data[k];
      const double saved = slot;
      slot = saved + options.h;
      const LossEvaluation plus = checked_loss(probe);
      slot = saved - options.h;
      const LossEvaluation minus = checked_loss(probe);
      slot = saved;
      if (plus.relu_pattern != base.relu_pattern || minus.relu_pattern != base.relu_pattern) {
        ++result.resampled;
        continue;
      }
      const double numeric = loss_difference(plus, minus) / (2.0 * options.h);
      const double a = analytic[t].data[k];
      const double err = relative_error(a, numeric);
      ++done;
      ++result.checked;
      if (err > result.max_rel_error || result.worst_tensor.empty()) {
        result.max_rel_error = std::max(err, result.max_rel_error);
        if (err >= result.max_rel_error) {
          result.worst_tensor = point.name(t);
          result.worst_index = k;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace fxh::nn
