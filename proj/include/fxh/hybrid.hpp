#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fxh/arima.hpp"
#include "fxh/arnn.hpp"
#include "fxh/config.hpp"
#include "fxh/metrics.hpp"
#include "fxh/timeseries_io.hpp"
#include "fxh/wavelet.hpp"

namespace fxh {

/// Everything estimated from the training segment and reused on later data.
struct FittedTransforms {
  std::vector<ThresholdRule> feature_rules;            ///< per indicator column; empty when not denoised
  std::map<std::string, ThresholdRule> price_rules;    ///< keyed by open/high/low/close
  MinMaxScaler feature_scaler;
  MinMaxScaler exo_scaler;
  MinMaxScaler target_scaler;
};

/// The series after denoising, featurization, scaling and windowing.
///
/// Rows are counted after the indicator warm-up: row r is bar r + warmup. The
/// three datasets are windowed inside their own split, so no sample mixes rows
/// of two splits.
struct PreparedData {
  std::size_t warmup = 0;
  SplitSizes sizes;  ///< in rows
  std::vector<std::int64_t> timestamps;
  std::vector<double> target_price;  ///< close (denoised when enabled), price units
  Matrix features;                   ///< scaled
  Matrix exo;                        ///< scaled
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;  ///< target_row of every dataset is a global row index
  FittedTransforms transforms;
};

/// With `fitted` null the transforms are estimated from the training rows;
/// otherwise they are applied as given. Throws DataError when a split is too
/// short for the wavelet or the window.
PreparedData prepare_data(const BarSeries& bars, const PipelineConfig& cfg,
                          const FittedTransforms* fitted = nullptr);

struct Provenance {
  std::uint32_t data_crc = 0;       ///< bars the model was fitted on
  std::uint32_t weights_crc = 0;    ///< serialized network weights
  std::uint32_t residuals_crc = 0;  ///< training residuals the ARIMA model saw
  std::uint32_t config_crc = 0;
};

struct HybridModel {
  PipelineConfig config;
  ArnnWeights arnn;
  arima::ArimaModel residual_model;  ///< state at the end of the training residuals
  FittedTransforms transforms;
  std::size_t warmup = 0;
  SplitSizes sizes;
  Provenance provenance;
  std::vector<std::string> warnings;
  double train_seconds = 0.0;
};

/// Residual model fitted on `residuals`; a singular fit falls back to
/// arima::zero_model() and appends a warning.
arima::ArimaModel fit_residual_model(std::span<const double> residuals, const arima::ArimaOrder& order,
                                     std::vector<std::string>& warnings);

/// One-step-ahead (or horizon-ahead) residual forecasts over `future`.
///
/// `model` has seen the fit residuals; `bridge` holds residuals observed after
/// them but before `future` starts (the validation split). Forecast k is made
/// with residuals through future[k - horizon]. With refit_every > 0 the model is
/// re-estimated on every residual known so far each refit_every steps.
std::vector<double> rolling_residual_forecasts(const arima::ArimaModel& model,
                                               std::span<const double> fit_residuals,
                                               std::span<const double> bridge,
                                               std::span<const double> future, std::size_t horizon,
                                               const arima::ArimaOrder& order, std::size_t refit_every,
                                               std::vector<std::string>& warnings);

/// Denoise, featurize, scale, window, train the network, fit ARIMA on the
/// network's training residuals in price units.
HybridModel fit_hybrid(const BarSeries& bars, const PipelineConfig& cfg);

struct ForecastReport {
  std::vector<std::int64_t> timestamps;
  // Price units.
  std::vector<double> y_true;
  std::vector<double> y_arnn;
  std::vector<double> r_hat;
  std::vector<double> y_hat;
  // Min-max units of the target scaler.
  std::vector<double> y_true_norm;
  std::vector<double> y_arnn_norm;
  std::vector<double> y_hat_norm;

  Metrics hybrid;
  Metrics arnn;
  Metrics hybrid_norm;
  Metrics arnn_norm;

  bool used_arima = true;
  double train_seconds = 0.0;
  double runtime_seconds = 0.0;
  nlohmann::json config;
  std::string arima_summary;
  Provenance provenance;
  std::vector<std::string> warnings;
};

/// Rolling evaluation over the test split of `bars` with the model's fitted
/// transforms. The residual state first advances through the validation
/// residuals. use_arima overrides the model's configuration.
ForecastReport evaluate(const HybridModel& model, const BarSeries& bars,
                        std::optional<bool> use_arima = std::nullopt);

/// Writes weights.arnn and model.json into `dir` (created if missing).
void save_model(const HybridModel& model, const std::filesystem::path& dir);
/// Throws DataError when the files are missing, corrupted or inconsistent.
HybridModel load_model(const std::filesystem::path& dir);

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes);
std::uint32_t crc32_doubles(std::span<const double> values);
std::uint32_t crc32_bars(const BarSeries& bars);

}  // namespace fxh
