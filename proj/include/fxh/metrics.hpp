#pragma once

#include <span>
#include <vector>

namespace fxh {

/// sqrt(mean((y_hat - y)^2)). Throws std::invalid_argument on empty or unequal input.
double rmse(std::span<const double> y_hat, std::span<const double> y);
/// mean(|(y_hat - y) / y|) * 100. Throws std::invalid_argument when any y is zero.
double mape(std::span<const double> y_hat, std::span<const double> y);
/// Fraction of t in [0, N-1) with (y[t+1] - y[t]) * (y_hat[t+1] - y[t]) >= 0.
double directional_accuracy(std::span<const double> y_hat, std::span<const double> y);

/// y - y_hat
std::vector<double> residual_series(std::span<const double> y, std::span<const double> y_hat);
/// y_hat + r_hat
std::vector<double> combine(std::span<const double> y_hat, std::span<const double> r_hat);

struct Metrics {
  double rmse = 0.0;
  double mape_percent = 0.0;
  double da = 0.0;
};

/// All three metrics; MAPE is NaN when some y is zero.
Metrics compute_metrics(std::span<const double> y_hat, std::span<const double> y);

}  // namespace fxh
