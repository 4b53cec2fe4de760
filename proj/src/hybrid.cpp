#include "fxh/hybrid.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <fstream>
#include <set>

#include "fxh/errors.hpp"
#include "fxh/indicators.hpp"

namespace fxh {

using nlohmann::json;

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc32_string(const std::string& s) {
  return crc32_bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

}  // namespace

std::uint32_t crc32_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> buf;
  buf.reserve(values.size() * 8);
  for (double v : values) put_u64(buf, std::bit_cast<std::uint64_t>(v));
  return crc32_bytes(buf);
}

std::uint32_t crc32_bars(const BarSeries& bars) {
  std::vector<std::uint8_t> buf;
  buf.reserve(bars.size() * 48);
  for (const Bar& b : bars.bars()) {
    put_u64(buf, static_cast<std::uint64_t>(b.timestamp));
    for (double v : {b.open, b.high, b.low, b.close, b.volume}) put_u64(buf, std::bit_cast<std::uint64_t>(v));
  }
  return crc32_bytes(buf);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shortest signal the multilevel transform accepts.
std::size_t min_wavelet_length(const DenoiseOptions& opt) {
  const std::size_t L = wavelet_filter(opt.wavelet).length();
  for (std::size_t n = L;; ++n) {
    std::size_t m = n;
    bool ok = true;
    for (int l = 0; l < opt.level; ++l) {
      if (m < L) {
        ok = false;
        break;
      }
      m = dwt_coeff_length(m, L, opt.mode);
    }
    if (ok) return n;
  }
}

// Segment boundaries [b[0], b[1]), [b[1], b[2]), [b[2], b[3]).
using Bounds = std::array<std::size_t, 4>;

std::vector<double> denoise_column(std::span<const double> v, const Bounds& b, const PipelineConfig& cfg,
                                   const ThresholdRule* given, ThresholdRule& used, const std::string& what) {
  const std::size_t min_len = min_wavelet_length(cfg.wavelet);
  if (cfg.denoise_scope == DenoiseScope::full_series) {
    if (v.size() < min_len)
      throw DataError(what + ": " + std::to_string(v.size()) + " values are too few for " + cfg.wavelet.wavelet +
                      " level " + std::to_string(cfg.wavelet.level));
    used = given ? *given : fit_threshold(v, cfg.wavelet);
    return denoise_with(v, used, cfg.wavelet);
  }
  static const char* kNames[] = {"training", "validation", "test"};
  for (int s = 0; s < 3; ++s) {
    if (b[s + 1] - b[s] < min_len)
      throw DataError(what + ": the " + std::string(kNames[s]) + " segment has " + std::to_string(b[s + 1] - b[s]) +
                      " values, " + cfg.wavelet.wavelet + " level " + std::to_string(cfg.wavelet.level) + " needs " +
                      std::to_string(min_len));
  }
  used = given ? *given : fit_threshold(v.subspan(b[0], b[1] - b[0]), cfg.wavelet);
  std::vector<double> out;
  out.reserve(v.size());
  for (int s = 0; s < 3; ++s) {
    const auto part = denoise_with(v.subspan(b[s], b[s + 1] - b[s]), used, cfg.wavelet);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

const std::vector<double>& price_column(const Ohlc& px, const std::string& name) {
  if (name == "open") return px.open;
  if (name == "high") return px.high;
  if (name == "low") return px.low;
  return px.close;
}

std::vector<double>& price_column(Ohlc& px, const std::string& name) {
  return const_cast<std::vector<double>&>(price_column(std::as_const(px), name));
}

WindowedDataset window_segment(const PreparedData& d, std::span<const double> target_norm, std::size_t begin,
                               std::size_t end, const PipelineConfig& cfg, const char* name) {
  if (end - begin < cfg.arch.T + cfg.horizon)
    throw DataError(std::string("the ") + name + " split has " + std::to_string(end - begin) +
                    " rows, fewer than window + horizon = " + std::to_string(cfg.arch.T + cfg.horizon));
  WindowedDataset ds = make_windows(d.features.slice_rows(begin, end), d.exo.slice_rows(begin, end),
                                    target_norm.subspan(begin, end - begin), cfg.arch.T, cfg.horizon);
  for (auto& r : ds.target_row) r += begin;
  return ds;
}

}  // namespace

PreparedData prepare_data(const BarSeries& bars, const PipelineConfig& cfg, const FittedTransforms* fitted) {
  PreparedData d;
  FittedTransforms& tf = d.transforms;
  if (fitted) tf = *fitted;

  std::size_t warmup = 0;
  for (const auto& s : cfg.indicators) warmup = std::max(warmup, indicator_lookback(s));
  if (bars.size() <= warmup + 10)
    throw DataError(std::to_string(bars.size()) + " bars do not cover the " + std::to_string(warmup) +
                    "-bar indicator warm-up plus three splits");
  d.warmup = warmup;
  const std::size_t rows = bars.size() - warmup;
  d.sizes = split_sizes(rows, cfg.split);
  const Bounds row_b{0, d.sizes.train, d.sizes.train + d.sizes.val, rows};
  const Bounds bar_b{0, warmup + row_b[1], warmup + row_b[2], bars.size()};

  // Prices: denoised over bar-level segments; the training segment includes the warm-up bars.
  const Ohlc raw = Ohlc::from_bars(bars);
  Ohlc px = raw;
  if (cfg.denoise) {
    std::set<std::string> cols{"close"};
    cols.insert(cfg.decoder_inputs.begin(), cfg.decoder_inputs.end());
    const bool denoise_ohlc = cfg.denoise_features && cfg.feature_order == FeatureOrder::indicators_on_denoised_prices;
    if (denoise_ohlc) cols.insert({"open", "high", "low"});
    for (const auto& name : cols) {
      const ThresholdRule* given = nullptr;
      if (fitted) {
        auto it = fitted->price_rules.find(name);
        if (it == fitted->price_rules.end()) throw DataError("model has no fitted threshold for " + name);
        given = &it->second;
      }
      ThresholdRule used;
      price_column(px, name) = denoise_column(price_column(raw, name), bar_b, cfg, given, used, name);
      tf.price_rules[name] = used;
    }
  }

  // Features.
  const bool on_denoised = cfg.denoise && cfg.denoise_features &&
                           cfg.feature_order == FeatureOrder::indicators_on_denoised_prices;
  FeatureMatrix fm = compute_feature_matrix(on_denoised ? px : raw, cfg.indicators, cfg.train.execution);
  if (fm.warmup != warmup) throw std::logic_error("indicator warm-up disagrees with the lookbacks");
  if (cfg.denoise && cfg.denoise_features && cfg.feature_order == FeatureOrder::denoise_indicators) {
    if (fitted && fitted->feature_rules.size() != fm.values.cols)
      throw DataError("model holds " + std::to_string(fitted->feature_rules.size()) + " feature thresholds for " +
                      std::to_string(fm.values.cols) + " indicators");
    tf.feature_rules.resize(fm.values.cols);
    for (std::size_t c = 0; c < fm.values.cols; ++c) {
      const auto col = fm.values.column(c);
      ThresholdRule used;
      fm.values.set_column(c, denoise_column(col, row_b, cfg, fitted ? &fitted->feature_rules[c] : nullptr, used,
                                             fm.column_names[c]));
      tf.feature_rules[c] = used;
    }
  } else {
    tf.feature_rules.clear();
  }

  Matrix exo(rows, cfg.decoder_inputs.size());
  for (std::size_t j = 0; j < cfg.decoder_inputs.size(); ++j) {
    const auto& src = price_column(px, cfg.decoder_inputs[j]);
    for (std::size_t r = 0; r < rows; ++r) exo(r, j) = src[r + warmup];
  }
  d.target_price.assign(px.close.begin() + static_cast<std::ptrdiff_t>(warmup), px.close.end());
  d.timestamps.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) d.timestamps[r] = bars[r + warmup].timestamp;

  if (!fitted) {
    tf.feature_scaler = fit_minmax(fm.values.slice_rows(0, row_b[1]));
    tf.exo_scaler = fit_minmax(exo.slice_rows(0, row_b[1]));
    tf.target_scaler = fit_minmax(Matrix::column_vector(std::span(d.target_price).first(row_b[1])));
  }
  d.features = apply_minmax(tf.feature_scaler, fm.values);
  d.exo = apply_minmax(tf.exo_scaler, exo);
  const std::vector<double> target_norm = apply_minmax(tf.target_scaler, d.target_price);

  d.train = window_segment(d, target_norm, row_b[0], row_b[1], cfg, "training");
  d.val = window_segment(d, target_norm, row_b[1], row_b[2], cfg, "validation");
  d.test = window_segment(d, target_norm, row_b[2], row_b[3], cfg, "test");
  return d;
}

arima::ArimaModel fit_residual_model(std::span<const double> residuals, const arima::ArimaOrder& order,
                                     std::vector<std::string>& warnings) {
  try {
    arima::ArimaModel m = arima::fit(residuals, order);
    for (const auto& w : m.warnings) warnings.push_back("residual model: " + w);
    return m;
  } catch (const NumericError& e) {
    warnings.push_back(std::string("residual model fit failed (") + e.what() +
                       "); using the identity residual model");
    return arima::zero_model();
  }
}

std::vector<double> rolling_residual_forecasts(const arima::ArimaModel& model, std::span<const double> fit_residuals,
                                               std::span<const double> bridge, std::span<const double> future,
                                               std::size_t horizon, const arima::ArimaOrder& order,
                                               std::size_t refit_every, std::vector<std::string>& warnings) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const int h = static_cast<int>(horizon);
  arima::ArimaModel st = model;
  std::vector<double> known;
  if (refit_every > 0) {
    known.assign(fit_residuals.begin(), fit_residuals.end());
    known.insert(known.end(), bridge.begin(), bridge.end());
  }
  for (double r : bridge) st = arima::observe(st, r);

  std::vector<double> out(future.size());
  std::size_t seen = 0;
  for (std::size_t k = 0; k < future.size(); ++k) {
    const std::size_t need = k + 1 >= horizon ? k + 1 - horizon : 0;
    while (seen < need) {
      st = arima::observe(st, future[seen]);
      if (refit_every > 0) known.push_back(future[seen]);
      ++seen;
    }
    if (refit_every > 0 && k > 0 && k % refit_every == 0) {
      std::vector<std::string> w;
      st = fit_residual_model(known, order, w);
      for (auto& s : w)
        if (std::find(warnings.begin(), warnings.end(), s) == warnings.end()) warnings.push_back(std::move(s));
    }
    out[k] = arima::forecast(st, h)[horizon - 1];
  }
  return out;
}

namespace {

std::vector<double> to_price(const HybridModel& m, std::span<const double> y_norm) {
  return invert_minmax(m.transforms.target_scaler, y_norm);
}

std::vector<double> targets_price(const PreparedData& d, const WindowedDataset& ds) {
  std::vector<double> out(ds.samples);
  for (std::size_t i = 0; i < ds.samples; ++i) out[i] = d.target_price[ds.target_row[i]];
  return out;
}

std::vector<double> residuals_on(const HybridModel& m, ArnnKernel& k, const PreparedData& d,
                                 const WindowedDataset& ds) {
  if (ds.empty()) return {};
  const auto pred = to_price(m, k.predict(ds, m.config.train.execution));
  return residual_series(targets_price(d, ds), pred);
}

std::uint32_t weights_crc(const ArnnWeights& w) { return crc32_bytes(serialize_weights(w)); }

std::string describe(const arima::ArimaModel& m) {
  std::string s = "ARIMA(" + std::to_string(m.order.p) + "," + std::to_string(m.order.d) + "," +
                  std::to_string(m.order.q) + ")";
  if (m.phi.empty() && m.theta.empty() && m.order.d == 0) return s + " identity (forecasts zero)";
  char buf[64];
  s += " c=";
  std::snprintf(buf, sizeof(buf), "%.6g", m.c);
  s += buf;
  for (std::size_t i = 0; i < m.phi.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " phi%zu=%.6g", i + 1, m.phi[i]);
    s += buf;
  }
  for (std::size_t i = 0; i < m.theta.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " theta%zu=%.6g", i + 1, m.theta[i]);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf), " sigma2=%.6g", m.sigma2);
  return s + buf;
}

}  // namespace

HybridModel fit_hybrid(const BarSeries& bars, const PipelineConfig& cfg_in) {
  PipelineConfig cfg = cfg_in;
  cfg.finalize();
  HybridModel m;
  const PreparedData d = prepare_data(bars, cfg, nullptr);

  const auto t0 = Clock::now();
  m.arnn = train(d.train, d.val, cfg.arch, cfg.train);
  m.train_seconds = seconds_since(t0);

  m.config = cfg;
  m.transforms = d.transforms;
  m.warmup = d.warmup;
  m.sizes = d.sizes;

  ArnnKernel kernel(m.arnn, cfg.train.grad_chunk);
  const auto residuals = residuals_on(m, kernel, d, d.train);
  if (cfg.use_arima) {
    m.residual_model = fit_residual_model(residuals, cfg.arima_order, m.warnings);
  } else {
    m.residual_model = arima::zero_model();
  }

  m.provenance.data_crc = crc32_bars(bars);
  m.provenance.weights_crc = weights_crc(m.arnn);
  m.provenance.residuals_crc = crc32_doubles(residuals);
  m.provenance.config_crc = crc32_string(config_to_json(cfg).dump());
  return m;
}

ForecastReport evaluate(const HybridModel& m, const BarSeries& bars, std::optional<bool> use_arima) {
  const auto t0 = Clock::now();
  if (weights_crc(m.arnn) != m.provenance.weights_crc)
    throw DataError("model weights do not match the weights the residual model was fitted on");
  const PipelineConfig& cfg = m.config;
  const PreparedData d = prepare_data(bars, cfg, &m.transforms);

  ForecastReport rep;
  rep.used_arima = use_arima.value_or(cfg.use_arima);
  rep.warnings = m.warnings;
  if (crc32_bars(bars) != m.provenance.data_crc)
    rep.warnings.push_back("evaluation bars differ from the bars the model was fitted on");

  ArnnKernel kernel(m.arnn, cfg.train.grad_chunk);
  const auto test_pred_norm = kernel.predict(d.test, cfg.train.execution);
  rep.y_arnn = to_price(m, test_pred_norm);
  rep.y_true = targets_price(d, d.test);
  rep.timestamps.resize(d.test.samples);
  for (std::size_t i = 0; i < d.test.samples; ++i) rep.timestamps[i] = d.timestamps[d.test.target_row[i]];

  arima::ArimaModel residual_model = m.residual_model;
  if (rep.used_arima && !cfg.use_arima) {
    // The ablation was trained without a residual model; fit one now.
    const auto fit_res = residuals_on(m, kernel, d, d.train);
    residual_model = fit_residual_model(fit_res, cfg.arima_order, rep.warnings);
  }
  if (rep.used_arima) {
    std::vector<double> fit_res;
    if (cfg.refit_every > 0) fit_res = residuals_on(m, kernel, d, d.train);
    const auto bridge = residuals_on(m, kernel, d, d.val);
    const auto future = residual_series(rep.y_true, rep.y_arnn);
    rep.r_hat = rolling_residual_forecasts(residual_model, fit_res, bridge, future, cfg.horizon, cfg.arima_order,
                                           cfg.refit_every, rep.warnings);
    rep.arima_summary = describe(residual_model);
  } else {
    rep.r_hat.assign(rep.y_arnn.size(), 0.0);
    rep.arima_summary = "disabled";
  }
  rep.y_hat = combine(rep.y_arnn, rep.r_hat);

  const auto& ts = m.transforms.target_scaler;
  rep.y_true_norm = apply_minmax(ts, rep.y_true);
  rep.y_arnn_norm = test_pred_norm;
  rep.y_hat_norm = apply_minmax(ts, rep.y_hat);

  rep.hybrid = compute_metrics(rep.y_hat, rep.y_true);
  rep.arnn = compute_metrics(rep.y_arnn, rep.y_true);
  rep.hybrid_norm = compute_metrics(rep.y_hat_norm, rep.y_true_norm);
  rep.arnn_norm = compute_metrics(rep.y_arnn_norm, rep.y_true_norm);

  rep.train_seconds = m.train_seconds;
  rep.config = config_to_json(cfg);
  rep.config["arima"]["enabled"] = rep.used_arima;
  rep.provenance = m.provenance;
  rep.runtime_seconds = seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json rule_json(const ThresholdRule& r) { return {{"lambda", r.lambda}, {"sigma", r.sigma_estimate}}; }

ThresholdRule rule_from(const json& j) {
  ThresholdRule r;
  r.lambda = j.at("lambda").get<double>();
  r.sigma_estimate = j.at("sigma").get<double>();
  return r;
}

json scaler_json(const MinMaxScaler& s) { return {{"min", s.x_min}, {"max", s.x_max}}; }

MinMaxScaler scaler_from(const json& j) {
  MinMaxScaler s;
  s.x_min = j.at("min").get<std::vector<double>>();
  s.x_max = j.at("max").get<std::vector<double>>();
  if (s.x_min.size() != s.x_max.size()) throw DataError("scaler min/max lengths differ");
  return s;
}

json arima_json(const arima::ArimaModel& m) {
  return {{"order", {m.order.p, m.order.d, m.order.q}},
          {"phi", m.phi},
          {"theta", m.theta},
          {"c", m.c},
          {"sigma2", m.sigma2},
          {"last_values", m.last_values},
          {"last_residuals", m.last_residuals},
          {"n_obs", m.n_obs},
          {"stationary", m.stationary},
          {"warnings", m.warnings}};
}

arima::ArimaModel arima_from(const json& j) {
  arima::ArimaModel m;
  const auto o = j.at("order").get<std::vector<int>>();
  if (o.size() != 3) throw DataError("residual model order must have three entries");
  m.order = {o[0], o[1], o[2]};
  m.phi = j.at("phi").get<std::vector<double>>();
  m.theta = j.at("theta").get<std::vector<double>>();
  m.c = j.at("c").get<double>();
  m.sigma2 = j.at("sigma2").get<double>();
  m.last_values = j.at("last_values").get<std::vector<double>>();
  m.last_residuals = j.at("last_residuals").get<std::vector<double>>();
  m.n_obs = j.at("n_obs").get<std::size_t>();
  m.stationary = j.at("stationary").get<bool>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (m.phi.size() != static_cast<std::size_t>(m.order.p) || m.theta.size() != static_cast<std::size_t>(m.order.q) ||
      m.last_values.size() != m.phi.size() + static_cast<std::size_t>(m.order.d) ||
      m.last_residuals.size() != m.theta.size())
    throw DataError("residual model state is inconsistent with its order");
  return m;
}

}  // namespace

void save_model(const HybridModel& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create model directory " + dir.string() + ": " + ec.message());
  save_weights(m.arnn, dir / "weights.arnn");

  json prices = json::object();
  for (const auto& [k, r] : m.transforms.price_rules) prices[k] = rule_json(r);
  json features = json::array();
  for (const auto& r : m.transforms.feature_rules) features.push_back(rule_json(r));
  const json j = {
      {"format", "fxhybrid.model/1"},
      {"config", config_to_json(m.config)},
      {"transforms",
       {{"price_thresholds", prices},
        {"feature_thresholds", features},
        {"feature_scaler", scaler_json(m.transforms.feature_scaler)},
        {"exo_scaler", scaler_json(m.transforms.exo_scaler)},
        {"target_scaler", scaler_json(m.transforms.target_scaler)}}},
      {"residual_model", arima_json(m.residual_model)},
      {"warmup", m.warmup},
      {"splits", {{"train", m.sizes.train}, {"val", m.sizes.val}, {"test", m.sizes.test}}},
      {"provenance",
       {{"data_crc32", m.provenance.data_crc},
        {"weights_crc32", m.provenance.weights_crc},
        {"residuals_crc32", m.provenance.residuals_crc},
        {"config_crc32", m.provenance.config_crc}}},
      {"warnings", m.warnings},
      {"train_seconds", m.train_seconds},
  };
  std::ofstream out(dir / "model.json");
  if (!out) throw DataError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + (dir / "model.json").string());
}

HybridModel load_model(const std::filesystem::path& dir) {
  const auto meta_path = dir / "model.json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("cannot open " + meta_path.string());
  HybridModel m;
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "fxhybrid.model/1")
      throw DataError("unsupported model format " + j.at("format").dump());
    try {
      m.config = config_from_json(j.at("config"));
    } catch (const ConfigError& e) {
      throw DataError(std::string("model configuration is invalid: ") + e.what());
    }
    const json& t = j.at("transforms");
    for (const auto& [k, v] : t.at("price_thresholds").items()) m.transforms.price_rules[k] = rule_from(v);
    for (const auto& v : t.at("feature_thresholds")) m.transforms.feature_rules.push_back(rule_from(v));
    m.transforms.feature_scaler = scaler_from(t.at("feature_scaler"));
    m.transforms.exo_scaler = scaler_from(t.at("exo_scaler"));
    m.transforms.target_scaler = scaler_from(t.at("target_scaler"));
    m.residual_model = arima_from(j.at("residual_model"));
    m.warmup = j.at("warmup").get<std::size_t>();
    const json& s = j.at("splits");
    m.sizes = {s.at("train").get<std::size_t>(), s.at("val").get<std::size_t>(), s.at("test").get<std::size_t>()};
    const json& p = j.at("provenance");
    m.provenance = {p.at("data_crc32").get<std::uint32_t>(), p.at("weights_crc32").get<std::uint32_t>(),
                    p.at("residuals_crc32").get<std::uint32_t>(), p.at("config_crc32").get<std::uint32_t>()};
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.train_seconds = j.at("train_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError("malformed " + meta_path.string() + ": " + e.what());
  }
  m.arnn = load_weights(dir / "weights.arnn", &m.config.arch);
  if (weights_crc(m.arnn) != m.provenance.weights_crc)
    throw DataError("weights.arnn does not match the weights recorded in model.json");
  if (m.transforms.feature_scaler.size() != m.config.indicators.size() ||
      m.transforms.exo_scaler.size() != m.config.decoder_inputs.size() || m.transforms.target_scaler.size() != 1)
    throw DataError("model scalers do not match the configured inputs");
  return m;
}

}  // namespace fxh
