#pragma once

#include <cstdint>

#include "fxh/timeseries_io.hpp"

namespace fxh {

/// Seeded price bars: a smooth latent path (a few sinusoids plus a slow random
/// walk) observed with Gaussian noise. Open is the previous close; high and low
/// extend past the body by half-normal amounts.
struct SyntheticBarsSpec {
  std::size_t bars = 5000;
  std::uint64_t seed = 1;
  double start_price = 110.0;
  std::int64_t start_time = 1546300800;  // 2019-01-01T00:00:00Z
  std::int64_t interval_seconds = 300;
  double noise = 0.02;       ///< observation noise sd
  double walk_sd = 0.002;    ///< latent random-walk step sd
  double amplitude = 0.25;   ///< typical sinusoid amplitude
};

BarSeries synthetic_bars(const SyntheticBarsSpec& spec);

/// Windowed regression data whose target is a smooth nonlinear function of
/// the preceding feature rows plus AR(2) noise. The single exogenous channel
/// carries the noise-free part of past targets, so a network can learn the
/// function but not the noise.
struct ArResidualSpec {
  std::size_t rows = 1500;
  std::uint64_t seed = 1;
  std::size_t n_features = 16;
  std::size_t window = 10;
  double phi1 = 0.55;
  double phi2 = 0.30;
  double noise_sd = 0.05;  ///< innovation sd of the AR(2) noise
  double val_fraction = 0.15;
  double test_fraction = 0.25;
};

struct ArResidualData {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
  std::vector<double> noise;  ///< the AR(2) component of every target row
};

ArResidualData ar_residual_dataset(const ArResidualSpec& spec);

}  // namespace fxh
