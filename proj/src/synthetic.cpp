#include "fxh/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fxh {

BarSeries synthetic_bars(const SyntheticBarsSpec& s) {
  if (s.bars < 2) throw std::invalid_argument("synthetic_bars: need at least 2 bars");
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  struct Wave {
    double amp, period, phase;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < 3; ++k)
    waves.push_back({s.amplitude * (0.4 + 0.8 * unif(rng)), 80.0 + 520.0 * unif(rng),
                     2.0 * std::numbers::pi * unif(rng)});

  std::vector<Bar> bars(s.bars);
  double walk = 0.0;
  double prev_close = s.start_price;
  for (std::size_t t = 0; t < s.bars; ++t) {
    walk += s.walk_sd * gauss(rng);
    double latent = s.start_price + walk;
    for (const auto& w : waves)
      latent += w.amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / w.period + w.phase);
    const double close = latent + s.noise * gauss(rng);
    const double open = t == 0 ? close : prev_close;
    Bar& b = bars[t];
    b.timestamp = s.start_time + static_cast<std::int64_t>(t) * s.interval_seconds;
    b.open = open;
    b.close = close;
    b.high = std::max(open, close) + 0.5 * s.noise * std::fabs(gauss(rng));
    b.low = std::min(open, close) - 0.5 * s.noise * std::fabs(gauss(rng));
    b.volume = std::floor(100.0 + 900.0 * unif(rng));
    prev_close = close;
  }
  return BarSeries(std::move(bars), s.interval_seconds);
}

ArResidualData ar_residual_dataset(const ArResidualSpec& s) {
  if (s.n_features < 5) throw std::invalid_argument("ar_residual_dataset: need at least 5 features");
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = s.rows;

  // Features: persistent AR(1) paths mixed with slow sinusoids, roughly unit scale.
  Matrix x(n, s.n_features);
  for (std::size_t c = 0; c < s.n_features; ++c) {
    const double rho = 0.9 + 0.08 * unif(rng);
    const double period = 20.0 + 80.0 * unif(rng);
    const double phase = 2.0 * std::numbers::pi * unif(rng);
    double a = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      a = rho * a + std::sqrt(1.0 - rho * rho) * gauss(rng);
      x(t, c) = 0.6 * a + 0.8 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
    }
  }

  // Target row t depends on feature rows t-1 and t-2 only.
  std::vector<double> signal(n, 0.0);
  for (std::size_t t = 2; t < n; ++t) {
    signal[t] = 0.5 + 0.15 * std::sin(1.5 * x(t - 1, 0)) + 0.1 * std::tanh(x(t - 1, 1) * x(t - 2, 2)) +
                0.08 * x(t - 1, 3) - 0.05 * x(t - 2, 4) * x(t - 2, 4);
  }
  ArResidualData out;
  out.noise.assign(n, 0.0);
  for (std::size_t t = 2; t < n; ++t)
    out.noise[t] = s.phi1 * out.noise[t - 1] + s.phi2 * out.noise[t - 2] + s.noise_sd * gauss(rng);

  std::vector<double> y(n);
  Matrix z(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    y[t] = signal[t] + out.noise[t];
    z(t, 0) = signal[t];
  }

  const auto n_test = static_cast<std::size_t>(std::llround(s.test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(s.val_fraction * static_cast<double>(n)));
  const std::size_t b1 = n - n_test - n_val;
  const std::size_t b2 = n - n_test;
  auto seg = [&](std::size_t a, std::size_t b) {
    WindowedDataset ds = make_windows(x.slice_rows(a, b), z.slice_rows(a, b), std::span(y).subspan(a, b - a),
                                      s.window, 1);
    for (auto& r : ds.target_row) r += a;
    return ds;
  };
  // Skip the two rows without a defined signal.
  out.train = seg(2, b1);
  out.val = seg(b1, b2);
  out.test = seg(b2, n);
  return out;
}

}  // namespace fxh
