#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fxh/execution.hpp"
#include "fxh/matrix.hpp"
#include "fxh/timeseries_io.hpp"

namespace fxh {

/// Column-oriented OHLC prices. Indicators read this rather than BarSeries so
/// they can also run on denoised price columns, which need not keep bar ordering.
struct Ohlc {
  std::vector<double> open;
  std::vector<double> high;
  std::vector<double> low;
  std::vector<double> close;

  static Ohlc from_bars(const BarSeries& bars);
  std::size_t size() const { return close.size(); }
};

// All series below are aligned with their input: element t belongs to bar t and
// is NaN while the lookback window is still filling.

double true_range(const Bar& bar, double prev_close);
std::vector<double> true_range_series(const Ohlc& px);

/// EMA with alpha = 2/(period+1), seeded by the simple mean of
/// values[start, start+period); first defined at start+period-1.
std::vector<double> ema(std::span<const double> values, int period, std::size_t start = 0);

/// Wilder smoothing of TR, seeded by the mean of TR[1..period].
std::vector<double> atr(const Ohlc& px, int period = 14);
std::vector<double> natr(const Ohlc& px, int period = 14);

/// Wilder RSI. A window with no movement reads 50.
std::vector<double> rsi(std::span<const double> closes, int period = 14);
/// Chande momentum oscillator over the trailing `period` changes.
std::vector<double> cmo(std::span<const double> closes, int period = 14);
std::vector<double> momentum(std::span<const double> closes, int period = 10);
/// Fast %K. A flat window reads 50.
std::vector<double> stochastic_k(const Ohlc& px, int period = 14);
/// Williams %R in [-100, 0]. A flat window reads -50.
std::vector<double> williams_r(const Ohlc& px, int period = 14);
/// (close - open) / (high - low); 0 when high == low.
std::vector<double> balance_of_power(const Ohlc& px);
std::vector<double> cci(const Ohlc& px, int period = 20);
/// Aroon up minus Aroon down over period+1 bars; ties resolve to the latest bar.
std::vector<double> aroon_oscillator(const Ohlc& px, int period = 25);
/// Wilder ADX; first defined at 2*period - 1.
std::vector<double> adx(const Ohlc& px, int period = 14);
std::vector<double> apo(std::span<const double> closes, int fast = 12, int slow = 26);
std::vector<double> ppo(std::span<const double> closes, int fast = 12, int slow = 26);
/// MACD line: both EMAs seeded at bar slow-1, so the fast EMA starts from the mean of
/// closes[slow-fast, slow).
std::vector<double> macd_line(std::span<const double> closes, int fast = 12, int slow = 26);
/// One-bar percent rate of change of a triple EMA.
std::vector<double> trix(std::span<const double> closes, int period = 15);

struct IndicatorSpec {
  std::string name;
  std::map<std::string, double> params;

  int param(const std::string& key, int fallback) const;
};

/// The 16 registered indicators in feature-column order:
/// adx, apo, aroonosc, bop, cci, cmo, ppo, macd, willr, mom, rsi, stoch_k, trix, atr, natr, trange.
std::vector<IndicatorSpec> default_indicator_specs();
const std::vector<std::string>& registered_indicators();

/// First defined row of an indicator.
std::size_t indicator_lookback(const IndicatorSpec& spec);
std::vector<double> compute_indicator(const Ohlc& px, const IndicatorSpec& spec);

struct FeatureMatrix {
  Matrix values;  ///< (rows after warmup) x (indicator count)
  std::vector<std::string> column_names;
  std::size_t warmup = 0;  ///< leading bars dropped; feature row r is bar r + warmup
};

/// Evaluates every spec, drops the longest warm-up and returns the rest.
/// The parallel path computes columns concurrently; the result is identical.
FeatureMatrix compute_feature_matrix(const Ohlc& px, const std::vector<IndicatorSpec>& specs,
                                     Execution exec = Execution::parallel);
FeatureMatrix compute_feature_matrix(const BarSeries& bars,
                                     const std::vector<IndicatorSpec>& specs = default_indicator_specs(),
                                     Execution exec = Execution::parallel);

}  // namespace fxh
