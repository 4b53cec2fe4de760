#pragma once

#include <string>
#include <vector>

#include "fxh/execution.hpp"
#include "fxh/hybrid.hpp"

namespace fxh {

struct BenchmarkCell {
  NetworkKind kind = NetworkKind::arnn;
  bool arima = false;  ///< only meaningful for the arnn kind
  bool denoised = true;

  /// "RNN", "LSTM", "ARNN" or "ARNN+ARIMA".
  std::string variant() const;
  std::string label() const;  ///< variant plus "denoised"/"raw"
};

/// {RNN, LSTM, ARNN, ARNN+ARIMA} x {denoised, raw}.
std::vector<BenchmarkCell> default_benchmark_cells();

struct BenchmarkCellResult {
  BenchmarkCell cell;
  bool ok = false;
  std::string error;
  ForecastReport report;
  double train_seconds = 0.0;  ///< wall clock of the network training the cell used
};

struct BenchmarkGrid {
  std::vector<BenchmarkCellResult> cells;  ///< grid order
  std::vector<std::size_t> ranking;        ///< successful cells by ascending price RMSE
};

/// Every cell shares the base configuration's splits and seed. Cells that differ
/// only in the residual model share one trained network. With Execution::parallel
/// distinct trainings run concurrently, each single-threaded; the results do not
/// depend on the execution mode. A failing cell is recorded and the rest continue.
BenchmarkGrid run_benchmark(const BarSeries& bars, const PipelineConfig& base,
                            const std::vector<BenchmarkCell>& cells = default_benchmark_cells(),
                            Execution exec = Execution::serial);

}  // namespace fxh
