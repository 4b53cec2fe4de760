#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fxh/benchmark_grid.hpp"
#include "fxh/config.hpp"
#include "fxh/errors.hpp"
#include "fxh/hybrid.hpp"
#include "fxh/metrics.hpp"
#include "fxh/report.hpp"
#include "fxh/synthetic.hpp"

using namespace fxh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using V = std::vector<double>;

PipelineConfig small_config() {
  PipelineConfig c;
  c.arch.encoder_layers = {8, 6};
  c.arch.decoder_layers = {8, 6};
  c.arch.step_feature_dim = 4;
  c.arch.head_rnn_width = 6;
  c.arch.head_dense = {4, 1};
  c.train.epochs = 3;
  c.train.batch_size = 32;
  c.finalize();
  return c;
}

BarSeries bars(std::size_t n = 1200, std::uint64_t seed = 3) {
  SyntheticBarsSpec s;
  s.bars = n;
  s.seed = seed;
  return synthetic_bars(s);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fxh_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FXH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Metrics, HandExamples) {
  const V y{1, 2, 3, 4}, p{2, 2, 1, 4};
  EXPECT_NEAR(rmse(p, y), std::sqrt(5.0 / 4.0), 1e-12);
  EXPECT_NEAR(rmse(V{1, 2}, V{2, 4}), std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(mape(V{110, 90}, V{100, 100}), 10.0, 1e-12);
  EXPECT_EQ(directional_accuracy(V{1, 0, 3}, V{1, 2, 1}), 0.0);
  EXPECT_EQ(directional_accuracy(V{1, 3, 1}, V{1, 2, 1}), 1.0);
  EXPECT_EQ(rmse(y, y), 0.0);
}

TEST(Metrics, DirectionalTieCountsAsHit) {
  // Flat truth: every product is zero, and zero counts.
  EXPECT_EQ(directional_accuracy(V{5, 9, 1, 5}, V{5, 5, 5, 5}), 1.0);
  EXPECT_EQ(directional_accuracy(V{0, 1, 2}, V{0, 1, 1}), 1.0);
}

TEST(Metrics, ErrorsAndNan) {
  EXPECT_THROW(rmse(V{}, V{}), std::invalid_argument);
  EXPECT_THROW(rmse(V{1}, V{1, 2}), std::invalid_argument);
  EXPECT_THROW(mape(V{1, 2}, V{0, 2}), std::invalid_argument);
  EXPECT_THROW(directional_accuracy(V{1}, V{1}), std::invalid_argument);
  const Metrics m = compute_metrics(V{1, 2}, V{0, 2});
  EXPECT_TRUE(std::isnan(m.mape_percent));
  EXPECT_NEAR(m.rmse, std::sqrt(0.5), 1e-12);
}

TEST(Metrics, ResidualAlgebra) {
  const V y{1.5, -2, 3.25}, yh{1, 1, 1}, r = residual_series(y, yh);
  EXPECT_EQ(r, (V{0.5, -3, 2.25}));
  EXPECT_EQ(combine(yh, r), y);
  // A perfect residual forecast gives a perfect hybrid.
  EXPECT_EQ(rmse(combine(yh, r), y), 0.0);
}

TEST(Config, DefaultsRoundTrip) {
  PipelineConfig c;
  c.finalize();
  EXPECT_EQ(c.arch.n_features, 16u);
  EXPECT_EQ(c.arch.n_exo, 1u);
  const json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(Config, RejectsBadDocuments) {
  EXPECT_THROW(config_from_json(json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"training", {{"epochz", 3}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"training", {{"epochs", "many"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"training", {{"learning_rate", -1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"denoise", {{"wavelet", "nope"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"denoise", {{"threshold", "soft"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"window", {{"decoder_inputs", {"high"}}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"network", {{"kind", "transformer"}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"split", {{"test_fraction", 1.5}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"indicators", {{{"name", "rsi"}, {"period", 0}}}}}), ConfigError);
  EXPECT_NO_THROW(config_from_json(json{{"training", {{"epochs", 7}}}}));
  EXPECT_EQ(config_from_json(json{{"training", {{"epochs", 7}}}}).train.epochs, 7u);
}

TEST(Prepare, SplitsAndScaling) {
  const PipelineConfig c = small_config();
  const BarSeries b = bars();
  const PreparedData d = prepare_data(b, c);
  const std::size_t rows = b.size() - d.warmup;
  EXPECT_EQ(d.sizes.train + d.sizes.val + d.sizes.test, rows);
  EXPECT_EQ(d.features.rows, rows);
  EXPECT_EQ(d.features.cols, 16u);
  EXPECT_EQ(d.target_price.size(), rows);

  // Windows stay inside their split and targets follow their window.
  const std::size_t T = c.arch.T;
  for (std::size_t i = 0; i < d.train.samples; ++i) {
    EXPECT_GE(d.train.target_row[i], T);
    EXPECT_LT(d.train.target_row[i], d.sizes.train);
  }
  EXPECT_GE(d.val.target_row.front(), d.sizes.train + T);
  EXPECT_GE(d.test.target_row.front(), d.sizes.train + d.sizes.val + T);
  EXPECT_EQ(d.test.target_row.back(), rows - 1);

  // Training features lie in [0, 1]; later rows may leave it.
  for (std::size_t r = 0; r < d.sizes.train; ++r)
    for (double v : d.features.row(r)) {
      EXPECT_GE(v, -1e-12);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
}

TEST(Prepare, TestRowsDoNotShapeTransforms) {
  const PipelineConfig c = small_config();
  const BarSeries b = bars();
  std::vector<Bar> raw = b.bars();
  for (std::size_t i = raw.size() - 50; i < raw.size(); ++i) {
    raw[i].close *= 1.5;
    raw[i].high *= 1.5;
  }
  const BarSeries altered(raw, b.interval_seconds());
  const PreparedData d1 = prepare_data(b, c);
  const PreparedData d2 = prepare_data(altered, c);
  EXPECT_EQ(d1.transforms.target_scaler.x_min, d2.transforms.target_scaler.x_min);
  EXPECT_EQ(d1.transforms.target_scaler.x_max, d2.transforms.target_scaler.x_max);
  for (std::size_t r = 0; r < d1.sizes.train; ++r) EXPECT_EQ(d1.target_price[r], d2.target_price[r]);
}

TEST(Prepare, RejectsTooShortSeries) {
  EXPECT_THROW(prepare_data(bars(120), small_config()), DataError);
}

TEST(Residuals, RollingForecastsUseOnlyThePast) {
  std::vector<std::string> warnings;
  const arima::ArimaOrder order{1, 0, 0};
  V fit_r(400), bridge(20), future(30);
  double prev = 0.0;
  std::uint64_t s = 7;
  auto next = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
  };
  for (auto* v : {&fit_r, &bridge, &future})
    for (double& x : *v) x = prev = 0.6 * prev + next();
  const auto m = fit_residual_model(fit_r, order, warnings);
  const V f = rolling_residual_forecasts(m, fit_r, bridge, future, 1, order, 0, warnings);
  ASSERT_EQ(f.size(), future.size());
  EXPECT_NEAR(f[0], m.c + m.phi[0] * bridge.back(), 1e-12);
  for (std::size_t k = 1; k < f.size(); ++k) EXPECT_NEAR(f[k], m.c + m.phi[0] * future[k - 1], 1e-12);

  // Changing the last future value changes no forecast.
  V future2 = future;
  future2.back() += 10.0;
  EXPECT_EQ(rolling_residual_forecasts(m, fit_r, bridge, future2, 1, order, 0, warnings), f);
  EXPECT_TRUE(warnings.empty());

  const auto z = fit_residual_model(V(50, 0.0), order, warnings);
  EXPECT_FALSE(warnings.empty());
  EXPECT_EQ(forecast(z, 1)[0], 0.0);
}

class HybridFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new BarSeries(bars());
    model_ = new HybridModel(fit_hybrid(*data_, small_config()));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete data_;
  }
  static BarSeries* data_;
  static HybridModel* model_;
};
BarSeries* HybridFixture::data_ = nullptr;
HybridModel* HybridFixture::model_ = nullptr;

TEST_F(HybridFixture, HybridIsNetworkPlusResidualForecast) {
  const ForecastReport r = evaluate(*model_, *data_);
  ASSERT_FALSE(r.y_hat.empty());
  EXPECT_EQ(r.y_hat.size(), r.y_true.size());
  for (std::size_t i = 0; i < r.y_hat.size(); ++i) EXPECT_EQ(r.y_hat[i], r.y_arnn[i] + r.r_hat[i]);
  EXPECT_NEAR(r.hybrid.rmse, rmse(r.y_hat, r.y_true), 1e-12);
  EXPECT_NEAR(r.arnn.rmse, rmse(r.y_arnn, r.y_true), 1e-12);
}

TEST_F(HybridFixture, WithoutArimaIsTheNetwork) {
  const ForecastReport r = evaluate(*model_, *data_, false);
  EXPECT_FALSE(r.used_arima);
  EXPECT_EQ(r.y_hat, r.y_arnn);
  for (double v : r.r_hat) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.hybrid.rmse, r.arnn.rmse);
}

TEST_F(HybridFixture, SameSeedIsBitIdentical) {
  const HybridModel again = fit_hybrid(*data_, small_config());
  EXPECT_EQ(serialize_weights(again.arnn), serialize_weights(model_->arnn));
  const ForecastReport a = evaluate(*model_, *data_), b = evaluate(again, *data_);
  EXPECT_EQ(a.y_hat, b.y_hat);
  EXPECT_EQ(a.hybrid.rmse, b.hybrid.rmse);
}

TEST_F(HybridFixture, ReportValidates) {
  const json j = report_to_json(evaluate(*model_, *data_));
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_TRUE(validate_report_json(j).empty());

  json broken = j;
  broken.erase("metrics");
  EXPECT_FALSE(validate_report_json(broken).empty());
  json tampered = j;
  tampered["metrics"]["hybrid"]["rmse"] = j["metrics"]["hybrid"]["rmse"].get<double>() * 1.01;
  EXPECT_FALSE(validate_report_json(tampered).empty());

  const std::string svg = render_svg(evaluate(*model_, *data_), 100);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST_F(HybridFixture, ModelDirectoryRoundTrip) {
  const fs::path dir = scratch("model");
  save_model(*model_, dir);
  const HybridModel loaded = load_model(dir);
  EXPECT_EQ(serialize_weights(loaded.arnn), serialize_weights(model_->arnn));
  EXPECT_EQ(loaded.residual_model.phi, model_->residual_model.phi);
  const ForecastReport a = evaluate(*model_, *data_), b = evaluate(loaded, *data_);
  EXPECT_EQ(a.y_hat, b.y_hat);

  fs::remove(dir / "weights.arnn");
  EXPECT_THROW(load_model(dir), DataError);
  EXPECT_THROW(load_model(dir / "missing"), DataError);
}

TEST(Benchmark, CellsAndSharedFits) {
  const auto cells = default_benchmark_cells();
  EXPECT_EQ(cells.size(), 8u);
  PipelineConfig c = small_config();
  c.train.epochs = 1;
  const std::vector<BenchmarkCell> two{{NetworkKind::arnn, false, true}, {NetworkKind::arnn, true, true}};
  const BenchmarkGrid g = run_benchmark(bars(), c, two);
  ASSERT_EQ(g.cells.size(), 2u);
  ASSERT_TRUE(g.cells[0].ok && g.cells[1].ok);
  EXPECT_EQ(g.cells[0].report.y_arnn, g.cells[1].report.y_arnn);
  EXPECT_EQ(g.cells[0].report.y_hat, g.cells[0].report.y_arnn);
  EXPECT_EQ(g.ranking.size(), 2u);
  EXPECT_NE(benchmark_table(g).find("ARNN+ARIMA"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string csv = (dir / "bars.csv").string();
  EXPECT_EQ(run_cli("synth --bars 1200 --seed 2 --out " + csv), 0);
  EXPECT_EQ(run_cli("train --data " + (dir / "nope.csv").string() + " --model " + (dir / "m").string()), 2);
  EXPECT_EQ(run_cli("train --data " + csv + " --model " + (dir / "m").string() + " --network gru"), 4);
  EXPECT_EQ(run_cli("train --frobnicate"), 4);
  {
    std::ofstream f(dir / "cfg.json");
    f << R"({"training": {"epochs": "three"}})";
  }
  EXPECT_EQ(run_cli("train --data " + csv + " --config " + (dir / "cfg.json").string() + " --model " +
                    (dir / "m").string()),
            4);
  EXPECT_EQ(run_cli("evaluate --data " + csv + " --model " + (dir / "missing").string()), 2);
  EXPECT_EQ(run_cli("features --data " + csv + " --out " + (dir / "f.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "f.csv"));
}
