#include "fxh/benchmark_grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace fxh {

std::string BenchmarkCell::variant() const {
  switch (kind) {
    case NetworkKind::rnn: return "RNN";
    case NetworkKind::lstm: return "LSTM";
    case NetworkKind::arnn: break;
  }
  return arima ? "ARNN+ARIMA" : "ARNN";
}

std::string BenchmarkCell::label() const { return variant() + (denoised ? " denoised" : " raw"); }

std::vector<BenchmarkCell> default_benchmark_cells() {
  std::vector<BenchmarkCell> out;
  for (bool dn : {true, false}) {
    out.push_back({NetworkKind::rnn, false, dn});
    out.push_back({NetworkKind::lstm, false, dn});
    out.push_back({NetworkKind::arnn, false, dn});
    out.push_back({NetworkKind::arnn, true, dn});
  }
  return out;
}

namespace {

struct Training {
  NetworkKind kind;
  bool denoised;
  std::vector<std::size_t> cells;
  bool wants_arima = false;
};

}  // namespace

BenchmarkGrid run_benchmark(const BarSeries& bars, const PipelineConfig& base, const std::vector<BenchmarkCell>& cells,
                            Execution exec) {
  BenchmarkGrid grid;
  grid.cells.resize(cells.size());
  std::vector<Training> trainings;
  {
    std::map<std::pair<int, bool>, std::size_t> index;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      grid.cells[i].cell = cells[i];
      const auto key = std::make_pair(static_cast<int>(cells[i].kind), cells[i].denoised);
      auto [it, fresh] = index.emplace(key, trainings.size());
      if (fresh) trainings.push_back({cells[i].kind, cells[i].denoised, {}});
      trainings[it->second].cells.push_back(i);
      if (cells[i].arima && cells[i].kind == NetworkKind::arnn) trainings[it->second].wants_arima = true;
    }
  }

  auto run = [&](Training& t, Execution inner) {
    PipelineConfig cfg = base;
    cfg.arch.kind = t.kind;
    cfg.denoise = t.denoised;
    cfg.use_arima = t.wants_arima;
    cfg.train.execution = inner;
    cfg.train.on_epoch = nullptr;
    try {
      const HybridModel model = fit_hybrid(bars, cfg);
      for (std::size_t i : t.cells) {
        auto& r = grid.cells[i];
        try {
          const bool arima = r.cell.arima && r.cell.kind == NetworkKind::arnn;
          r.report = evaluate(model, bars, arima);
          r.train_seconds = model.train_seconds;
          r.ok = true;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t i : t.cells) grid.cells[i].error = e.what();
    }
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(trainings.size()); ++k)
      run(trainings[static_cast<std::size_t>(k)], Execution::serial);
  } else {
    for (auto& t : trainings) run(t, base.train.execution);
  }

  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i].ok) grid.ranking.push_back(i);
  std::stable_sort(grid.ranking.begin(), grid.ranking.end(), [&](std::size_t a, std::size_t b) {
    const double ra = grid.cells[a].report.hybrid.rmse;
    const double rb = grid.cells[b].report.hybrid.rmse;
    if (std::isnan(ra) != std::isnan(rb)) return std::isnan(rb);
    return ra < rb;
  });
  return grid;
}

}  // namespace fxh
