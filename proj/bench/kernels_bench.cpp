// Serial vs OpenMP paths of the parallel kernels. Both paths produce identical
// results; only the wall clock differs.

#include <benchmark/benchmark.h>

#include <numeric>

#include "fxh/arnn.hpp"
#include "fxh/indicators.hpp"
#include "fxh/synthetic.hpp"

using namespace fxh;

namespace {

Execution mode(const benchmark::State& s) { return s.range(0) ? Execution::parallel : Execution::serial; }

const ArResidualData& data() {
  static const ArResidualData d = [] {
    ArResidualSpec s;
    s.rows = 600;
    return ar_residual_dataset(s);
  }();
  return d;
}

void BM_LossAndGradient(benchmark::State& state) {
  const ArnnWeights w = initialize_weights(ArnnArchitecture{}, 1);
  ArnnKernel k(w);
  std::vector<std::size_t> idx(std::min<std::size_t>(128, data().train.samples));
  std::iota(idx.begin(), idx.end(), 0);
  nn::ParameterSet g = w.params.zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(k.loss_and_gradient(data().train, idx, g, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}
BENCHMARK(BM_LossAndGradient)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const ArnnWeights w = initialize_weights(ArnnArchitecture{}, 1);
  ArnnKernel k(w);
  for (auto _ : state) benchmark::DoNotOptimize(k.predict(data().test, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data().test.samples));
}
BENCHMARK(BM_Predict)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FeatureMatrix(benchmark::State& state) {
  SyntheticBarsSpec s;
  s.bars = 20000;
  const BarSeries bars = synthetic_bars(s);
  for (auto _ : state)
    benchmark::DoNotOptimize(compute_feature_matrix(bars, default_indicator_specs(), mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bars.size()));
}
BENCHMARK(BM_FeatureMatrix)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
