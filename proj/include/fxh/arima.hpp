#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fxh::arima {

struct ArimaOrder {
  int p = 3;
  int d = 0;
  int q = 0;

  /// Throws std::invalid_argument for negative orders or the trivial (0,0,0) model.
  void validate() const;
};

/// Fitted ARIMA(p,d,q) with the state needed to forecast:
///
///   w_t = (1 - B)^d R_t
///   w_t = c + sum_n phi_n w_{t-n} + eps_t + sum_n theta_n eps_{t-n}
///
/// The model is a value: observe() returns an advanced copy.
struct ArimaModel {
  ArimaOrder order;
  std::vector<double> phi;
  std::vector<double> theta;
  double c = 0.0;
  double sigma2 = 0.0;
  std::vector<double> last_values;     ///< tail of the undifferenced series (length p + d)
  std::vector<double> last_residuals;  ///< last q innovations, oldest first
  std::size_t n_obs = 0;               ///< observations seen (fit + observe)
  bool stationary = true;
  std::vector<std::string> warnings;

  /// c / (1 - sum phi) of the differenced process.
  double unconditional_mean() const;
};

std::vector<double> difference(std::span<const double> series, int d);
/// Inverse of difference(): seed_values are the first d values of the original series.
std::vector<double> undifference(std::span<const double> diffed, std::span<const double> seed_values,
                                 int d);

/// True when every root of 1 - sum phi_n z^n lies outside the unit circle
/// (checked by the Durbin-Levinson step-down recursion).
bool is_stationary(std::span<const double> phi);

enum class FitMethod {
  automatic,  ///< OLS when q == 0, CSS otherwise
  ols,        ///< exact least squares on the lagged regression; q must be 0
  css,        ///< conditional sum of squares, zero-seeded innovations, Nelder-Mead
};

ArimaModel fit(std::span<const double> series, const ArimaOrder& order,
               FitMethod method = FitMethod::automatic);

/// Innovations of the differenced series under the model's coefficients,
/// seeded with zeros, for t = p .. n-1 (CSS convention).
std::vector<double> css_residuals(std::span<const double> diffed, double c,
                                  std::span<const double> phi, std::span<const double> theta);

/// h-step expectations with future innovations set to zero.
std::vector<double> forecast(const ArimaModel& model, int steps);

/// Appends an observed value of the undifferenced series, returning the advanced model.
ArimaModel observe(const ArimaModel& model, double value);

/// Model that forecasts zero forever; used when the residual fit is singular.
ArimaModel zero_model();

}  // namespace fxh::arima
