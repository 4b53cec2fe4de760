#include "fxh/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fxh/errors.hpp"

namespace fxh {

using nlohmann::json;

namespace {

// Reads the members of one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown configuration key '" + path_ + "." + k + "'");
    }
  }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  template <typename Int>
    requires std::is_integral_v<Int>
  void read(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer() && !v->is_number_unsigned())
        throw ConfigError(where(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_integer() && v->get<std::int64_t>() < 0)
          throw ConfigError(where(key) + ": expected a non-negative integer");
      }
      out = v->get<Int>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
          throw ConfigError(where(key) + ": expected non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(where(key) + ": expected strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename F>
auto config_guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::string to_string(FeatureOrder o) {
  return o == FeatureOrder::denoise_indicators ? "denoise_indicators" : "indicators_on_denoised_prices";
}

std::string to_string(DenoiseScope s) { return s == DenoiseScope::per_split ? "per_split" : "full_series"; }

void PipelineConfig::finalize() {
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0))
    throw ConfigError("split.test_fraction must lie in (0, 1)");
  if (!(split.val_fraction_of_train > 0.0 && split.val_fraction_of_train < 1.0))
    throw ConfigError("split.val_fraction must lie in (0, 1)");
  if (wavelet.level < 1) throw ConfigError("denoise.level must be >= 1");
  config_guard("denoise.wavelet", [&] { return wavelet_filter(wavelet.wavelet).length(); });
  if (threshold_rule != "universal_hard")
    throw ConfigError("denoise.threshold: only 'universal_hard' is supported, got '" + threshold_rule + "'");
  if (indicators.empty()) throw ConfigError("indicators: at least one indicator is required");
  {
    std::set<std::string> seen;
    for (const auto& s : indicators) {
      if (!seen.insert(s.name).second) throw ConfigError("indicators: '" + s.name + "' listed twice");
      config_guard("indicators." + s.name, [&] { return indicator_lookback(s); });
      for (const auto& [k, v] : s.params) {
        const bool fast_slow = s.name == "apo" || s.name == "ppo" || s.name == "macd";
        const bool ok = fast_slow ? (k == "fast" || k == "slow") : (k == "period" && s.name != "bop" && s.name != "trange");
        if (!ok) throw ConfigError("indicators." + s.name + ": unknown parameter '" + k + "'");
        if (v < 1.0) throw ConfigError("indicators." + s.name + "." + k + " must be >= 1");
      }
    }
  }
  if (horizon < 1) throw ConfigError("window.horizon must be >= 1");
  if (decoder_inputs.empty() || decoder_inputs.front() != "close")
    throw ConfigError("window.decoder_inputs must start with \"close\"");
  for (const auto& d : decoder_inputs)
    if (d != "close" && d != "high" && d != "low")
      throw ConfigError("window.decoder_inputs: unknown series '" + d + "' (expected close, high or low)");
  if (std::set<std::string>(decoder_inputs.begin(), decoder_inputs.end()).size() != decoder_inputs.size())
    throw ConfigError("window.decoder_inputs: duplicate series");

  arch.n_features = indicators.size();
  arch.n_exo = decoder_inputs.size();
  config_guard("network", [&] {
    arch.validate();
    return 0;
  });
  config_guard("training", [&] {
    train.validate();
    return 0;
  });
  config_guard("arima", [&] {
    if (use_arima) arima_order.validate();
    return 0;
  });
  if (plot_points < 2) throw ConfigError("report.plot_points must be >= 2");
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "config");

  if (const json* s = root.get("data")) {
    Section sec(*s, "data");
    sec.read("interval_seconds", c.interval_seconds);
  }
  if (const json* s = root.get("split")) {
    Section sec(*s, "split");
    sec.read("test_fraction", c.split.test_fraction);
    sec.read("val_fraction", c.split.val_fraction_of_train);
  }
  if (const json* s = root.get("denoise")) {
    Section sec(*s, "denoise");
    sec.read("enabled", c.denoise);
    sec.read("features", c.denoise_features);
    std::string order = to_string(c.feature_order);
    sec.read("feature_order", order);
    if (order == "denoise_indicators") c.feature_order = FeatureOrder::denoise_indicators;
    else if (order == "indicators_on_denoised_prices") c.feature_order = FeatureOrder::indicators_on_denoised_prices;
    else throw ConfigError("denoise.feature_order: unknown value '" + order + "'");
    std::string scope = to_string(c.denoise_scope);
    sec.read("scope", scope);
    if (scope == "per_split") c.denoise_scope = DenoiseScope::per_split;
    else if (scope == "full_series") c.denoise_scope = DenoiseScope::full_series;
    else throw ConfigError("denoise.scope: unknown value '" + scope + "'");
    sec.read("wavelet", c.wavelet.wavelet);
    sec.read("level", c.wavelet.level);
    std::string mode = to_string(c.wavelet.mode);
    sec.read("mode", mode);
    c.wavelet.mode = config_guard("denoise.mode", [&] { return boundary_mode_from_string(mode); });
    sec.read("threshold", c.threshold_rule);
  }
  if (const json* s = root.get("indicators")) {
    if (!s->is_array()) throw ConfigError("indicators: expected an array of {\"name\": ..., <params>} objects");
    c.indicators.clear();
    for (const auto& e : *s) {
      if (!e.is_object() || !e.contains("name") || !e["name"].is_string())
        throw ConfigError("indicators: every entry needs a string \"name\"");
      IndicatorSpec spec;
      spec.name = e["name"].get<std::string>();
      const auto& reg = registered_indicators();
      if (std::find(reg.begin(), reg.end(), spec.name) == reg.end())
        throw ConfigError("indicators: unknown indicator '" + spec.name + "'");
      for (const auto& [k, v] : e.items()) {
        if (k == "name") continue;
        if (!v.is_number_integer() && !v.is_number_unsigned())
          throw ConfigError("indicators." + spec.name + "." + k + ": expected an integer");
        spec.params[k] = v.get<double>();
      }
      c.indicators.push_back(std::move(spec));
    }
  }
  if (const json* s = root.get("window")) {
    Section sec(*s, "window");
    sec.read("T", c.arch.T);
    sec.read("horizon", c.horizon);
    sec.read("decoder_inputs", c.decoder_inputs);
  }
  if (const json* s = root.get("network")) {
    Section sec(*s, "network");
    std::string kind = to_string(c.arch.kind);
    sec.read("kind", kind);
    c.arch.kind = config_guard("network.kind", [&] { return network_kind_from_string(kind); });
    sec.read("encoder_layers", c.arch.encoder_layers);
    sec.read("decoder_layers", c.arch.decoder_layers);
    sec.read("step_feature_dim", c.arch.step_feature_dim);
    sec.read("head_rnn_width", c.arch.head_rnn_width);
    sec.read("head_dense", c.arch.head_dense);
    sec.read("rnn_bias", c.arch.rnn_bias);
    sec.read("forget_bias", c.train.forget_bias);
  }
  if (const json* s = root.get("training")) {
    Section sec(*s, "training");
    sec.read("batch_size", c.train.batch_size);
    sec.read("epochs", c.train.epochs);
    sec.read("learning_rate", c.train.learning_rate);
    sec.read("seed", c.train.seed);
    sec.read("keep_best", c.train.keep_best);
    std::string opt = c.train.optimizer == Optimizer::adam ? "adam" : "sgd";
    sec.read("optimizer", opt);
    if (opt == "adam") c.train.optimizer = Optimizer::adam;
    else if (opt == "sgd") c.train.optimizer = Optimizer::sgd;
    else throw ConfigError("training.optimizer: expected adam or sgd, got '" + opt + "'");
    sec.read("grad_chunk", c.train.grad_chunk);
    bool parallel = c.train.execution == Execution::parallel;
    sec.read("parallel", parallel);
    c.train.execution = parallel ? Execution::parallel : Execution::serial;
  }
  if (const json* s = root.get("arima")) {
    Section sec(*s, "arima");
    sec.read("enabled", c.use_arima);
    sec.read("p", c.arima_order.p);
    sec.read("d", c.arima_order.d);
    sec.read("q", c.arima_order.q);
    sec.read("refit_every", c.refit_every);
  }
  if (const json* s = root.get("report")) {
    Section sec(*s, "report");
    sec.read("plot_points", c.plot_points);
  }
  c.finalize();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  json ind = json::array();
  for (const auto& s : c.indicators) {
    json e = {{"name", s.name}};
    for (const auto& [k, v] : s.params) e[k] = static_cast<std::int64_t>(v);
    ind.push_back(e);
  }
  return {
      {"data", {{"interval_seconds", c.interval_seconds}}},
      {"split", {{"test_fraction", c.split.test_fraction}, {"val_fraction", c.split.val_fraction_of_train}}},
      {"denoise",
       {{"enabled", c.denoise},
        {"features", c.denoise_features},
        {"feature_order", to_string(c.feature_order)},
        {"scope", to_string(c.denoise_scope)},
        {"wavelet", c.wavelet.wavelet},
        {"level", c.wavelet.level},
        {"mode", to_string(c.wavelet.mode)},
        {"threshold", c.threshold_rule}}},
      {"indicators", ind},
      {"window", {{"T", c.arch.T}, {"horizon", c.horizon}, {"decoder_inputs", c.decoder_inputs}}},
      {"network",
       {{"kind", to_string(c.arch.kind)},
        {"encoder_layers", c.arch.encoder_layers},
        {"decoder_layers", c.arch.decoder_layers},
        {"step_feature_dim", c.arch.step_feature_dim},
        {"head_rnn_width", c.arch.head_rnn_width},
        {"head_dense", c.arch.head_dense},
        {"rnn_bias", c.arch.rnn_bias},
        {"forget_bias", c.train.forget_bias}}},
      {"training",
       {{"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"seed", c.train.seed},
        {"keep_best", c.train.keep_best},
        {"optimizer", c.train.optimizer == Optimizer::adam ? "adam" : "sgd"},
        {"grad_chunk", c.train.grad_chunk},
        {"parallel", c.train.execution == Execution::parallel}}},
      {"arima",
       {{"enabled", c.use_arima},
        {"p", c.arima_order.p},
        {"d", c.arima_order.d},
        {"q", c.arima_order.q},
        {"refit_every", c.refit_every}}},
      {"report", {{"plot_points", c.plot_points}}},
  };
}

}  // namespace fxh
