#include "fxh/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fxh {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

double rmse(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

double mape(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y, "mape");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw std::invalid_argument("mape: truth value is zero at index " + std::to_string(i));
    s += std::abs((y_hat[i] - y[i]) / y[i]);
  }
  return s / static_cast<double>(y.size()) * 100.0;
}

double directional_accuracy(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size()) throw std::invalid_argument("directional_accuracy: length mismatch");
  if (y.size() < 2) throw std::invalid_argument("directional_accuracy: need at least 2 points");
  std::size_t hits = 0;
  for (std::size_t t = 0; t + 1 < y.size(); ++t)
    if ((y[t + 1] - y[t]) * (y_hat[t + 1] - y[t]) >= 0.0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(y.size() - 1);
}

std::vector<double> residual_series(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("residual_series: length mismatch");
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - y_hat[i];
  return r;
}

std::vector<double> combine(std::span<const double> y_hat, std::span<const double> r_hat) {
  if (y_hat.size() != r_hat.size()) throw std::invalid_argument("combine: length mismatch");
  std::vector<double> out(y_hat.size());
  for (std::size_t i = 0; i < y_hat.size(); ++i) out[i] = y_hat[i] + r_hat[i];
  return out;
}

Metrics compute_metrics(std::span<const double> y_hat, std::span<const double> y) {
  Metrics m;
  m.rmse = rmse(y_hat, y);
  try {
    m.mape_percent = mape(y_hat, y);
  } catch (const std::invalid_argument&) {
    m.mape_percent = std::numeric_limits<double>::quiet_NaN();
  }
  m.da = y.size() >= 2 ? directional_accuracy(y_hat, y) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

}  // namespace fxh
