// fxhybrid: command-line front end for the forecasting pipeline.
//
// Exit codes: 0 success, 2 data error, 3 numeric failure, 4 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fxh/benchmark_grid.hpp"
#include "fxh/config.hpp"
#include "fxh/errors.hpp"
#include "fxh/hybrid.hpp"
#include "fxh/indicators.hpp"
#include "fxh/report.hpp"
#include "fxh/synthetic.hpp"
#include "fxh/wavelet.hpp"

namespace {

using namespace fxh;

struct Common {
  std::string data;
  std::string config;
  bool quiet = false;
};

PipelineConfig read_config(const Common& c) {
  return c.config.empty() ? [] {
    PipelineConfig cfg;
    cfg.finalize();
    return cfg;
  }()
                          : load_config(c.config);
}

BarSeries read_bars(const Common& c, const PipelineConfig& cfg) {
  CsvSchema schema;
  schema.interval_seconds = cfg.interval_seconds;
  return load_csv(c.data, schema);
}

void print_metrics(const char* name, const Metrics& m) {
  std::printf("%-22s rmse=%.6g  mape=%.4f%%  da=%.4f\n", name, m.rmse, m.mape_percent, m.da);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-denoised attention RNN + ARIMA residual forecaster"};
  app.require_subcommand(1);
  Common common;

  // synth
  SyntheticBarsSpec synth;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "Write a seeded synthetic OHLCV series");
  c_synth->add_option("--bars", synth.bars, "Number of bars")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "Observation noise sd")->capture_default_str();
  c_synth->add_option("--start-price", synth.start_price)->capture_default_str();
  c_synth->add_option("--interval", synth.interval_seconds, "Bar interval in seconds")->capture_default_str();
  c_synth->add_option("--out", synth_out, "Output CSV")->required();

  // denoise
  std::string dn_out, dn_column = "close", dn_threshold = "universal-hard";
  DenoiseOptions dn_opt;
  std::string dn_mode = "symmetric";
  auto* c_denoise = app.add_subcommand("denoise", "Add a wavelet-denoised copy of one price column");
  c_denoise->add_option("--data", common.data, "Bars CSV")->required();
  c_denoise->add_option("--out", dn_out, "Output CSV")->required();
  c_denoise->add_option("--column", dn_column, "open, high, low or close")->capture_default_str();
  c_denoise->add_option("--wavelet", dn_opt.wavelet)->capture_default_str();
  c_denoise->add_option("--level", dn_opt.level)->capture_default_str();
  c_denoise->add_option("--mode", dn_mode, "symmetric or periodization")->capture_default_str();
  c_denoise->add_option("--threshold", dn_threshold, "Only universal-hard")->capture_default_str();

  // features
  std::string ft_out;
  bool ft_denoise = false;
  auto* c_features = app.add_subcommand("features", "Compute the indicator feature matrix");
  c_features->add_option("--data", common.data, "Bars CSV")->required();
  c_features->add_option("--config", common.config, "Pipeline configuration (JSON)");
  c_features->add_option("--out", ft_out, "Output CSV")->required();
  c_features->add_flag("--denoise-features", ft_denoise, "Wavelet-denoise every indicator column");

  // train
  std::string model_dir;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> kind;
  bool no_arima = false;
  bool no_denoise = false;
  auto* c_train = app.add_subcommand("train", "Fit the network and the residual ARIMA model");
  c_train->add_option("--data", common.data, "Bars CSV")->required();
  c_train->add_option("--config", common.config, "Pipeline configuration (JSON)");
  c_train->add_option("--model", model_dir, "Output model directory")->required();
  c_train->add_option("--epochs", epochs, "Override training.epochs");
  c_train->add_option("--seed", seed, "Override training.seed");
  c_train->add_option("--network", kind, "Override network.kind (arnn, rnn, lstm)");
  c_train->add_flag("--no-arima", no_arima, "Skip the residual model (pure network)");
  c_train->add_flag("--no-denoise", no_denoise, "Train on raw prices");
  c_train->add_flag("--quiet", common.quiet, "No per-epoch progress");

  // evaluate
  std::string report_path, plot_path;
  std::optional<std::size_t> plot_points;
  bool eval_no_arima = false;
  auto* c_eval = app.add_subcommand("evaluate", "Rolling evaluation over the test split");
  c_eval->add_option("--data", common.data, "Bars CSV")->required();
  c_eval->add_option("--model", model_dir, "Model directory written by train")->required();
  c_eval->add_option("--report", report_path, "JSON report path");
  c_eval->add_option("--plot", plot_path, "SVG plot path");
  c_eval->add_option("--plot-points", plot_points, "Samples shown in the plot");
  c_eval->add_flag("--no-arima", eval_no_arima, "Evaluate the network alone");

  // predict
  std::string pred_out;
  auto* c_pred = app.add_subcommand("predict", "Write test-split forecasts as CSV");
  c_pred->add_option("--data", common.data, "Bars CSV")->required();
  c_pred->add_option("--model", model_dir, "Model directory written by train")->required();
  c_pred->add_option("--out", pred_out, "Output CSV")->required();

  // benchmark
  std::string bench_out, bench_table;
  bool bench_parallel = false;
  auto* c_bench = app.add_subcommand("benchmark", "Network variants x {denoised, raw} ablation grid");
  c_bench->add_option("--data", common.data, "Bars CSV")->required();
  c_bench->add_option("--config", common.config, "Pipeline configuration (JSON)");
  c_bench->add_option("--out", bench_out, "JSON output");
  c_bench->add_option("--table", bench_table, "Text table output");
  c_bench->add_option("--epochs", epochs, "Override training.epochs");
  c_bench->add_option("--seed", seed, "Override training.seed");
  c_bench->add_flag("--parallel-cells", bench_parallel, "Run independent trainings concurrently");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  try {
    if (*c_synth) {
      save_csv(synthetic_bars(synth), synth_out);
      std::printf("wrote %zu bars to %s\n", synth.bars, synth_out.c_str());
      return 0;
    }

    if (*c_denoise) {
      if (dn_threshold != "universal-hard" && dn_threshold != "universal_hard")
        throw ConfigError("--threshold: only universal-hard is supported");
      try {
        dn_opt.mode = boundary_mode_from_string(dn_mode);
        wavelet_filter(dn_opt.wavelet);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const BarSeries bars = load_csv(common.data);
      const Ohlc px = Ohlc::from_bars(bars);
      const std::vector<double>* col = dn_column == "open"   ? &px.open
                                       : dn_column == "high" ? &px.high
                                       : dn_column == "low"  ? &px.low
                                       : dn_column == "close" ? &px.close
                                                              : nullptr;
      if (!col) throw ConfigError("--column: expected open, high, low or close");
      const auto out = denoise(*col, wavelet_filter(dn_opt.wavelet), dn_opt.level, dn_opt.mode);
      std::ofstream f(dn_out);
      if (!f) throw DataError("cannot write " + dn_out);
      f << CsvSchema::kHeader << "," << dn_column << "_denoised\n";
      for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        f << b.timestamp << "," << fmt17(b.open) << "," << fmt17(b.high) << "," << fmt17(b.low) << ","
          << fmt17(b.close) << "," << fmt17(b.volume) << "," << fmt17(out[i]) << "\n";
      }
      return 0;
    }

    const PipelineConfig base = (*c_features || *c_train || *c_bench) ? read_config(common) : PipelineConfig{};

    if (*c_features) {
      const BarSeries bars = read_bars(common, base);
      FeatureMatrix fm = compute_feature_matrix(bars, base.indicators);
      if (ft_denoise) {
        for (std::size_t c = 0; c < fm.values.cols; ++c)
          fm.values.set_column(c, denoise(fm.values.column(c), wavelet_filter(base.wavelet.wavelet),
                                          base.wavelet.level, base.wavelet.mode));
      }
      std::ofstream f(ft_out);
      if (!f) throw DataError("cannot write " + ft_out);
      f << "timestamp";
      for (const auto& n : fm.column_names) f << "," << n;
      f << "\n";
      for (std::size_t r = 0; r < fm.values.rows; ++r) {
        f << bars[r + fm.warmup].timestamp;
        for (double v : fm.values.row(r)) f << "," << fmt17(v);
        f << "\n";
      }
      std::printf("wrote %zu rows x %zu features (warm-up %zu bars dropped)\n", fm.values.rows, fm.values.cols,
                  fm.warmup);
      return 0;
    }

    if (*c_train) {
      PipelineConfig cfg = base;
      if (epochs) cfg.train.epochs = *epochs;
      if (seed) cfg.train.seed = *seed;
      if (kind) {
        try {
          cfg.arch.kind = network_kind_from_string(*kind);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("--network: ") + e.what());
        }
      }
      if (no_arima) cfg.use_arima = false;
      if (no_denoise) cfg.denoise = false;
      cfg.finalize();
      if (!common.quiet) {
        cfg.train.on_epoch = [](const EpochReport& e) {
          std::fprintf(stderr, "epoch %4zu  train %.6g  val %.6g%s\n", e.epoch, e.train_loss, e.val_loss,
                       e.improved ? "  *" : "");
        };
      }
      const BarSeries bars = read_bars(common, cfg);
      const HybridModel model = fit_hybrid(bars, cfg);
      save_model(model, model_dir);
      warn_all(model.warnings);
      std::printf("trained %s on %zu bars in %.1f s (best epoch %zu); residual model order (%d,%d,%d)\n",
                  to_string(cfg.arch.kind).c_str(), bars.size(), model.train_seconds, model.arnn.meta.best_epoch,
                  model.residual_model.order.p, model.residual_model.order.d, model.residual_model.order.q);
      std::printf("model written to %s\n", model_dir.c_str());
      return 0;
    }

    if (*c_eval || *c_pred) {
      const HybridModel model = load_model(model_dir);
      const BarSeries bars = read_bars(common, model.config);
      std::optional<bool> arima;
      if (eval_no_arima) arima = false;
      const ForecastReport rep = evaluate(model, bars, arima);
      warn_all(rep.warnings);
      if (*c_pred) {
        std::ofstream f(pred_out);
        if (!f) throw DataError("cannot write " + pred_out);
        f << "timestamp,y_true,y_arnn,r_hat,y_hat\n";
        for (std::size_t i = 0; i < rep.y_hat.size(); ++i)
          f << rep.timestamps[i] << "," << fmt17(rep.y_true[i]) << "," << fmt17(rep.y_arnn[i]) << ","
            << fmt17(rep.r_hat[i]) << "," << fmt17(rep.y_hat[i]) << "\n";
        std::printf("wrote %zu forecasts to %s\n", rep.y_hat.size(), pred_out.c_str());
        return 0;
      }
      std::printf("test samples: %zu  residual model: %s\n", rep.y_hat.size(), rep.arima_summary.c_str());
      print_metrics(rep.used_arima ? "network + ARIMA" : "network", rep.hybrid);
      if (rep.used_arima) print_metrics("network alone", rep.arnn);
      print_metrics("normalized", rep.hybrid_norm);
      if (!report_path.empty()) write_text(report_path, report_to_json(rep).dump(2) + "\n");
      if (!plot_path.empty())
        write_text(plot_path, render_svg(rep, plot_points.value_or(model.config.plot_points)));
      return 0;
    }

    if (*c_bench) {
      PipelineConfig cfg = base;
      if (epochs) cfg.train.epochs = *epochs;
      if (seed) cfg.train.seed = *seed;
      cfg.finalize();
      const BarSeries bars = read_bars(common, cfg);
      const BenchmarkGrid grid =
          run_benchmark(bars, cfg, default_benchmark_cells(), bench_parallel ? Execution::parallel : Execution::serial);
      const std::string table = benchmark_table(grid);
      std::fputs(table.c_str(), stdout);
      if (!bench_out.empty()) write_text(bench_out, benchmark_to_json(grid).dump(2) + "\n");
      if (!bench_table.empty()) write_text(bench_table, table);
      for (const auto& c : grid.cells)
        if (!c.ok) return 2;
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 4;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
