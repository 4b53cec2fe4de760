#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fxh/arima.hpp"
#include "fxh/arnn.hpp"
#include "fxh/indicators.hpp"
#include "fxh/timeseries_io.hpp"
#include "fxh/wavelet.hpp"
#include "json.hpp"

namespace fxh {

/// Whether indicators are computed on raw prices and then denoised column by
/// column, or computed on denoised prices.
enum class FeatureOrder { denoise_indicators, indicators_on_denoised_prices };

/// per_split: threshold fitted on the training segment, each split transformed on
/// its own. full_series: one transform over the whole series (looks ahead).
enum class DenoiseScope { per_split, full_series };

std::string to_string(FeatureOrder o);
std::string to_string(DenoiseScope s);

/// Every knob of the pipeline. Defaults reproduce the reference configuration.
struct PipelineConfig {
  std::int64_t interval_seconds = 0;  ///< 0 infers the bar interval from the data
  SplitSpec split;

  bool denoise = true;           ///< denoise the close series used as decoder input and target
  bool denoise_features = true;  ///< also denoise the encoder features
  FeatureOrder feature_order = FeatureOrder::denoise_indicators;
  DenoiseScope denoise_scope = DenoiseScope::per_split;
  DenoiseOptions wavelet;
  std::string threshold_rule = "universal_hard";

  std::vector<IndicatorSpec> indicators = default_indicator_specs();

  std::size_t horizon = 1;
  std::vector<std::string> decoder_inputs{"close"};  ///< subset of close, high, low; close first

  ArnnArchitecture arch;  ///< n_features / n_exo are derived from indicators and decoder_inputs
  TrainConfig train;

  bool use_arima = true;
  arima::ArimaOrder arima_order{3, 0, 0};
  std::size_t refit_every = 0;  ///< 0: fit once on training residuals

  std::size_t plot_points = 300;

  /// Fills derived fields and checks ranges; throws ConfigError.
  void finalize();
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& c);

}  // namespace fxh
