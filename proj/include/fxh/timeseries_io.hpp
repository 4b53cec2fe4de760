#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fxh/matrix.hpp"

namespace fxh {

/// One OHLCV bar. Timestamps are UTC seconds since the epoch.
struct Bar {
  std::int64_t timestamp = 0;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;

  /// low <= min(open, close), high >= max(open, close), volume >= 0.
  bool is_valid() const;
};

/// Chronologically ordered bars on a fixed interval grid (gaps allowed).
class BarSeries {
 public:
  BarSeries() = default;

  /// Validates every invariant; throws DataError naming the offending index.
  /// An interval of 0 infers the grid as the gcd of the timestamp gaps.
  BarSeries(std::vector<Bar> bars, std::int64_t interval_seconds = 0);

  std::size_t size() const { return bars_.size(); }
  bool empty() const { return bars_.empty(); }
  const Bar& operator[](std::size_t i) const { return bars_[i]; }
  const std::vector<Bar>& bars() const { return bars_; }
  std::int64_t interval_seconds() const { return interval_seconds_; }

  std::vector<double> closes() const;
  std::vector<std::int64_t> timestamps() const;

  /// Bars [begin, end) keeping the interval.
  BarSeries slice(std::size_t begin, std::size_t end) const;

 private:
  std::vector<Bar> bars_;
  std::int64_t interval_seconds_ = 0;
};

/// Fixed CSV layout: `timestamp,open,high,low,close,volume`. Extra trailing
/// columns are ignored. Timestamps are epoch seconds or ISO-8601 UTC.
struct CsvSchema {
  static constexpr const char* kHeader = "timestamp,open,high,low,close,volume";
  std::int64_t interval_seconds = 0;  ///< 0 = infer from the data
};

BarSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void save_csv(const BarSeries& series, const std::filesystem::path& path);

/// Parses "1546300800", "2019-01-01T00:05:00Z", "2019-01-01 00:05:00" or
/// "2019.01.01 00:05" (MetaTrader export style). Returns nullopt on failure.
std::optional<std::int64_t> parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_seconds);

struct SplitSpec {
  double test_fraction = 0.25;
  double val_fraction_of_train = 0.20;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// |test| = round(f_test * n), |val| = round(f_val * (n - |test|)).
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

struct BarSplits {
  BarSeries train;
  BarSeries val;
  BarSeries test;
};

BarSplits chronological_split(const BarSeries& series, const SplitSpec& spec = {});

/// Column-wise min-max normalisation fitted on training rows only.
struct MinMaxScaler {
  std::vector<double> x_min;
  std::vector<double> x_max;

  bool fitted() const { return !x_min.empty(); }
  std::size_t size() const { return x_min.size(); }
  /// Constant columns (x_max == x_min) scale to 0.
  bool degenerate(std::size_t column) const { return x_max[column] == x_min[column]; }
  std::vector<std::size_t> degenerate_columns() const;
};

MinMaxScaler fit_minmax(const Matrix& train_features);
Matrix apply_minmax(const MinMaxScaler& scaler, const Matrix& x);
/// Scales one column of values with the statistics of `column`.
std::vector<double> apply_minmax(const MinMaxScaler& scaler, std::span<const double> values,
                                 std::size_t column = 0);
std::vector<double> invert_minmax(const MinMaxScaler& scaler, std::span<const double> y_norm,
                                  std::size_t column = 0);

/// Sliding windows for the sequence model. Sample i packs rows [i, i+T) of the
/// features and exogenous inputs and the target at row i + T + horizon - 1.
struct WindowedDataset {
  std::size_t samples = 0;
  std::size_t window = 0;
  std::size_t horizon = 1;
  std::size_t n_features = 0;
  std::size_t n_exo = 0;
  std::vector<double> x;  ///< (samples, T, n_features)
  std::vector<double> z;  ///< (samples, T, n_exo)
  std::vector<double> y;  ///< (samples)
  std::vector<std::size_t> target_row;  ///< source row of each target

  std::span<const double> x_window(std::size_t i) const {
    return {x.data() + i * window * n_features, window * n_features};
  }
  std::span<const double> z_window(std::size_t i) const {
    return {z.data() + i * window * n_exo, window * n_exo};
  }
  bool empty() const { return samples == 0; }

  /// Subset of samples, in the given order.
  WindowedDataset subset(std::span<const std::size_t> indices) const;
};

WindowedDataset make_windows(const Matrix& features, const Matrix& exogenous,
                             std::span<const double> target, std::size_t window,
                             std::size_t horizon = 1);

}  // namespace fxh
