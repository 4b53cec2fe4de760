#include "fxh/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "fxh/errors.hpp"

namespace fxh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_period(int period, const char* what) {
  if (period < 1) throw std::invalid_argument(std::string(what) + ": period must be >= 1");
}

void require_length(std::size_t n, std::size_t needed, const char* what) {
  if (n < needed)
    throw DataError(std::string(what) + ": needs at least " + std::to_string(needed) +
                    " values, got " + std::to_string(n));
}

// Sliding-window extremum via a monotonic deque. `better(a, b)` is true when a
// should replace b; using >= / <= keeps the latest index on ties.
template <typename Better>
std::vector<std::size_t> rolling_arg_extreme(std::span<const double> v, std::size_t window,
                                             Better better) {
  std::vector<std::size_t> out(v.size(), 0);
  std::deque<std::size_t> dq;
  for (std::size_t t = 0; t < v.size(); ++t) {
    while (!dq.empty() && better(v[t], v[dq.back()])) dq.pop_back();
    dq.push_back(t);
    if (dq.front() + window <= t) dq.pop_front();
    out[t] = dq.front();
  }
  return out;
}

// Wilder average: mean of x[first, first+period), then (prev*(p-1) + x)/p.
std::vector<double> wilder(std::span<const double> x, int period, std::size_t first) {
  std::vector<double> out(x.size(), kNaN);
  const auto p = static_cast<std::size_t>(period);
  if (x.size() < first + p) return out;
  double acc = 0.0;
  for (std::size_t t = first; t < first + p; ++t) acc += x[t];
  double avg = acc / period;
  out[first + p - 1] = avg;
  for (std::size_t t = first + p; t < x.size(); ++t) {
    avg = (avg * (period - 1) + x[t]) / period;
    out[t] = avg;
  }
  return out;
}

}  // namespace

Ohlc Ohlc::from_bars(const BarSeries& bars) {
  Ohlc px;
  px.open.reserve(bars.size());
  px.high.reserve(bars.size());
  px.low.reserve(bars.size());
  px.close.reserve(bars.size());
  for (const Bar& b : bars.bars()) {
    px.open.push_back(b.open);
    px.high.push_back(b.high);
    px.low.push_back(b.low);
    px.close.push_back(b.close);
  }
  return px;
}

double true_range(const Bar& bar, double prev_close) {
  return std::max({bar.high - bar.low, std::abs(bar.high - prev_close),
                   std::abs(bar.low - prev_close)});
}

std::vector<double> true_range_series(const Ohlc& px) {
  std::vector<double> out(px.size(), kNaN);
  for (std::size_t t = 1; t < px.size(); ++t) {
    const double pc = px.close[t - 1];
    out[t] = std::max({px.high[t] - px.low[t], std::abs(px.high[t] - pc), std::abs(px.low[t] - pc)});
  }
  return out;
}

std::vector<double> ema(std::span<const double> values, int period, std::size_t start) {
  require_period(period, "ema");
  std::vector<double> out(values.size(), kNaN);
  const auto p = static_cast<std::size_t>(period);
  if (values.size() < start + p) return out;
  double acc = 0.0;
  for (std::size_t t = start; t < start + p; ++t) acc += values[t];
  double e = acc / period;
  out[start + p - 1] = e;
  const double alpha = 2.0 / (period + 1.0);
  for (std::size_t t = start + p; t < values.size(); ++t) {
    e += alpha * (values[t] - e);
    out[t] = e;
  }
  return out;
}

std::vector<double> atr(const Ohlc& px, int period) {
  require_period(period, "atr");
  require_length(px.size(), static_cast<std::size_t>(period) + 1, "atr");
  return wilder(true_range_series(px), period, 1);
}

std::vector<double> natr(const Ohlc& px, int period) {
  std::vector<double> out = atr(px, period);
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (!std::isnan(out[t])) out[t] = px.close[t] != 0.0 ? 100.0 * out[t] / px.close[t] : 0.0;
  }
  return out;
}

std::vector<double> rsi(std::span<const double> closes, int period) {
  require_period(period, "rsi");
  require_length(closes.size(), static_cast<std::size_t>(period) + 1, "rsi");
  std::vector<double> gain(closes.size(), 0.0);
  std::vector<double> loss(closes.size(), 0.0);
  for (std::size_t t = 1; t < closes.size(); ++t) {
    const double d = closes[t] - closes[t - 1];
    gain[t] = d > 0 ? d : 0.0;
    loss[t] = d < 0 ? -d : 0.0;
  }
  const auto g = wilder(gain, period, 1);
  const auto l = wilder(loss, period, 1);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = static_cast<std::size_t>(period); t < closes.size(); ++t) {
    const double total = g[t] + l[t];
    out[t] = total > 0.0 ? 100.0 * g[t] / total : 50.0;
  }
  return out;
}

std::vector<double> cmo(std::span<const double> closes, int period) {
  require_period(period, "cmo");
  require_length(closes.size(), static_cast<std::size_t>(period) + 1, "cmo");
  const auto p = static_cast<std::size_t>(period);
  std::vector<double> out(closes.size(), kNaN);
  // Window sums are recomputed per bar so values are exactly shift-invariant.
  for (std::size_t t = p; t < closes.size(); ++t) {
    double up = 0.0;
    double down = 0.0;
    for (std::size_t k = t + 1 - p; k <= t; ++k) {
      const double d = closes[k] - closes[k - 1];
      if (d > 0) up += d;
      else down -= d;
    }
    const double total = up + down;
    out[t] = total > 0.0 ? 100.0 * (up - down) / total : 0.0;
  }
  return out;
}

std::vector<double> momentum(std::span<const double> closes, int period) {
  require_period(period, "momentum");
  require_length(closes.size(), static_cast<std::size_t>(period) + 1, "momentum");
  const auto p = static_cast<std::size_t>(period);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = p; t < closes.size(); ++t) out[t] = closes[t] - closes[t - p];
  return out;
}

std::vector<double> stochastic_k(const Ohlc& px, int period) {
  require_period(period, "stochastic_k");
  require_length(px.size(), static_cast<std::size_t>(period), "stochastic_k");
  const auto p = static_cast<std::size_t>(period);
  const auto hi = rolling_arg_extreme(px.high, p, [](double a, double b) { return a >= b; });
  const auto lo = rolling_arg_extreme(px.low, p, [](double a, double b) { return a <= b; });
  std::vector<double> out(px.size(), kNaN);
  for (std::size_t t = p - 1; t < px.size(); ++t) {
    const double hh = px.high[hi[t]];
    const double ll = px.low[lo[t]];
    out[t] = hh > ll ? 100.0 * (px.close[t] - ll) / (hh - ll) : 50.0;
  }
  return out;
}

std::vector<double> williams_r(const Ohlc& px, int period) {
  require_period(period, "williams_r");
  require_length(px.size(), static_cast<std::size_t>(period), "williams_r");
  const auto p = static_cast<std::size_t>(period);
  const auto hi = rolling_arg_extreme(px.high, p, [](double a, double b) { return a >= b; });
  const auto lo = rolling_arg_extreme(px.low, p, [](double a, double b) { return a <= b; });
  std::vector<double> out(px.size(), kNaN);
  for (std::size_t t = p - 1; t < px.size(); ++t) {
    const double hh = px.high[hi[t]];
    const double ll = px.low[lo[t]];
    out[t] = hh > ll ? -100.0 * (hh - px.close[t]) / (hh - ll) : -50.0;
  }
  return out;
}

std::vector<double> balance_of_power(const Ohlc& px) {
  std::vector<double> out(px.size());
  for (std::size_t t = 0; t < px.size(); ++t) {
    const double range = px.high[t] - px.low[t];
    out[t] = range > 0.0 ? (px.close[t] - px.open[t]) / range : 0.0;
  }
  return out;
}

std::vector<double> cci(const Ohlc& px, int period) {
  require_period(period, "cci");
  require_length(px.size(), static_cast<std::size_t>(period), "cci");
  const auto p = static_cast<std::size_t>(period);
  std::vector<double> tp(px.size());
  for (std::size_t t = 0; t < px.size(); ++t) tp[t] = (px.high[t] + px.low[t] + px.close[t]) / 3.0;
  std::vector<double> out(px.size(), kNaN);
  for (std::size_t t = p - 1; t < px.size(); ++t) {
    double mean = 0.0;
    for (std::size_t k = t + 1 - p; k <= t; ++k) mean += tp[k];
    mean /= period;
    double md = 0.0;
    for (std::size_t k = t + 1 - p; k <= t; ++k) md += std::abs(tp[k] - mean);
    md /= period;
    out[t] = md > 0.0 ? (tp[t] - mean) / (0.015 * md) : 0.0;
  }
  return out;
}

std::vector<double> aroon_oscillator(const Ohlc& px, int period) {
  require_period(period, "aroon_oscillator");
  require_length(px.size(), static_cast<std::size_t>(period) + 1, "aroon_oscillator");
  const auto p = static_cast<std::size_t>(period);
  const auto hi = rolling_arg_extreme(px.high, p + 1, [](double a, double b) { return a >= b; });
  const auto lo = rolling_arg_extreme(px.low, p + 1, [](double a, double b) { return a <= b; });
  std::vector<double> out(px.size(), kNaN);
  for (std::size_t t = p; t < px.size(); ++t) {
    const double up = 100.0 * static_cast<double>(p - (t - hi[t])) / period;
    const double down = 100.0 * static_cast<double>(p - (t - lo[t])) / period;
    out[t] = up - down;
  }
  return out;
}

std::vector<double> adx(const Ohlc& px, int period) {
  require_period(period, "adx");
  const auto p = static_cast<std::size_t>(period);
  require_length(px.size(), 2 * p, "adx");
  const std::size_t n = px.size();
  std::vector<double> plus_dm(n, 0.0);
  std::vector<double> minus_dm(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const double up = px.high[t] - px.high[t - 1];
    const double down = px.low[t - 1] - px.low[t];
    plus_dm[t] = (up > down && up > 0.0) ? up : 0.0;
    minus_dm[t] = (down > up && down > 0.0) ? down : 0.0;
  }
  const auto tr = true_range_series(px);
  const auto s_tr = wilder(tr, period, 1);
  const auto s_plus = wilder(plus_dm, period, 1);
  const auto s_minus = wilder(minus_dm, period, 1);

  std::vector<double> dx(n, 0.0);
  for (std::size_t t = p; t < n; ++t) {
    const double pdi = s_tr[t] > 0.0 ? 100.0 * s_plus[t] / s_tr[t] : 0.0;
    const double mdi = s_tr[t] > 0.0 ? 100.0 * s_minus[t] / s_tr[t] : 0.0;
    dx[t] = (pdi + mdi) > 0.0 ? 100.0 * std::abs(pdi - mdi) / (pdi + mdi) : 0.0;
  }
  return wilder(dx, period, p);
}

std::vector<double> apo(std::span<const double> closes, int fast, int slow) {
  if (fast >= slow) throw std::invalid_argument("apo: fast period must be shorter than slow");
  require_length(closes.size(), static_cast<std::size_t>(slow), "apo");
  const auto f = ema(closes, fast);
  const auto s = ema(closes, slow);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = static_cast<std::size_t>(slow) - 1; t < closes.size(); ++t) out[t] = f[t] - s[t];
  return out;
}

std::vector<double> ppo(std::span<const double> closes, int fast, int slow) {
  if (fast >= slow) throw std::invalid_argument("ppo: fast period must be shorter than slow");
  require_length(closes.size(), static_cast<std::size_t>(slow), "ppo");
  const auto f = ema(closes, fast);
  const auto s = ema(closes, slow);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = static_cast<std::size_t>(slow) - 1; t < closes.size(); ++t)
    out[t] = s[t] != 0.0 ? 100.0 * (f[t] - s[t]) / s[t] : 0.0;
  return out;
}

std::vector<double> macd_line(std::span<const double> closes, int fast, int slow) {
  if (fast >= slow) throw std::invalid_argument("macd: fast period must be shorter than slow");
  require_length(closes.size(), static_cast<std::size_t>(slow), "macd");
  const auto f = ema(closes, fast, static_cast<std::size_t>(slow - fast));
  const auto s = ema(closes, slow);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = static_cast<std::size_t>(slow) - 1; t < closes.size(); ++t) out[t] = f[t] - s[t];
  return out;
}

std::vector<double> trix(std::span<const double> closes, int period) {
  require_period(period, "trix");
  const auto p = static_cast<std::size_t>(period);
  require_length(closes.size(), 3 * p - 1, "trix");
  const auto e1 = ema(closes, period);
  const auto e2 = ema(e1, period, p - 1);
  const auto e3 = ema(e2, period, 2 * p - 2);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t t = 3 * p - 2; t < closes.size(); ++t)
    out[t] = e3[t - 1] != 0.0 ? 100.0 * (e3[t] - e3[t - 1]) / e3[t - 1] : 0.0;
  return out;
}

int IndicatorSpec::param(const std::string& key, int fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  if (v < 1.0 || v != std::floor(v))
    throw std::invalid_argument(name + ": parameter '" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

const std::vector<std::string>& registered_indicators() {
  static const std::vector<std::string> names = {"adx", "apo",  "aroonosc", "bop",     "cci", "cmo",
                                                 "ppo", "macd", "willr",    "mom",     "rsi", "stoch_k",
                                                 "trix", "atr", "natr",     "trange"};
  return names;
}

std::vector<IndicatorSpec> default_indicator_specs() {
  std::vector<IndicatorSpec> specs;
  for (const auto& n : registered_indicators()) specs.push_back({n, {}});
  return specs;
}

std::size_t indicator_lookback(const IndicatorSpec& s) {
  const auto& n = s.name;
  if (n == "adx") return 2 * static_cast<std::size_t>(s.param("period", 14)) - 1;
  if (n == "apo" || n == "ppo" || n == "macd") {
    if (s.param("fast", 12) >= s.param("slow", 26))
      throw std::invalid_argument(n + ": fast period must be shorter than slow");
    return static_cast<std::size_t>(s.param("slow", 26)) - 1;
  }
  if (n == "aroonosc") return static_cast<std::size_t>(s.param("period", 25));
  if (n == "bop") return 0;
  if (n == "cci") return static_cast<std::size_t>(s.param("period", 20)) - 1;
  if (n == "cmo" || n == "rsi" || n == "atr" || n == "natr")
    return static_cast<std::size_t>(s.param("period", 14));
  if (n == "willr" || n == "stoch_k") return static_cast<std::size_t>(s.param("period", 14)) - 1;
  if (n == "mom") return static_cast<std::size_t>(s.param("period", 10));
  if (n == "trix") return 3 * static_cast<std::size_t>(s.param("period", 15)) - 2;
  if (n == "trange") return 1;
  throw std::invalid_argument("unknown indicator '" + n + "'");
}

std::vector<double> compute_indicator(const Ohlc& px, const IndicatorSpec& s) {
  const auto& n = s.name;
  if (n == "adx") return adx(px, s.param("period", 14));
  if (n == "apo") return apo(px.close, s.param("fast", 12), s.param("slow", 26));
  if (n == "aroonosc") return aroon_oscillator(px, s.param("period", 25));
  if (n == "bop") return balance_of_power(px);
  if (n == "cci") return cci(px, s.param("period", 20));
  if (n == "cmo") return cmo(px.close, s.param("period", 14));
  if (n == "ppo") return ppo(px.close, s.param("fast", 12), s.param("slow", 26));
  if (n == "macd") return macd_line(px.close, s.param("fast", 12), s.param("slow", 26));
  if (n == "willr") return williams_r(px, s.param("period", 14));
  if (n == "mom") return momentum(px.close, s.param("period", 10));
  if (n == "rsi") return rsi(px.close, s.param("period", 14));
  if (n == "stoch_k") return stochastic_k(px, s.param("period", 14));
  if (n == "trix") return trix(px.close, s.param("period", 15));
  if (n == "atr") return atr(px, s.param("period", 14));
  if (n == "natr") return natr(px, s.param("period", 14));
  if (n == "trange") return true_range_series(px);
  throw std::invalid_argument("unknown indicator '" + n + "'");
}

FeatureMatrix compute_feature_matrix(const Ohlc& px, const std::vector<IndicatorSpec>& specs,
                                     Execution exec) {
  if (specs.empty()) throw std::invalid_argument("compute_feature_matrix: no indicators requested");
  std::size_t warmup = 0;
  for (const auto& s : specs) warmup = std::max(warmup, indicator_lookback(s));
  if (px.size() <= warmup)
    throw DataError("compute_feature_matrix: " + std::to_string(px.size()) +
                    " bars do not cover the " + std::to_string(warmup) + "-bar warm-up");

  std::vector<std::vector<double>> columns(specs.size());
  if (exec == Execution::parallel) {
    // Exceptions must not escape an OpenMP region; validate serially first.
    for (const auto& s : specs) indicator_lookback(s);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < specs.size(); ++c) columns[c] = compute_indicator(px, specs[c]);
  } else {
    for (std::size_t c = 0; c < specs.size(); ++c) columns[c] = compute_indicator(px, specs[c]);
  }

  FeatureMatrix fm;
  fm.warmup = warmup;
  fm.values = Matrix(px.size() - warmup, specs.size());
  for (std::size_t c = 0; c < specs.size(); ++c) {
    fm.column_names.push_back(specs[c].name);
    for (std::size_t r = 0; r < fm.values.rows; ++r) {
      const double v = columns[c][r + warmup];
      if (std::isnan(v))
        throw NumericError("indicator " + specs[c].name + " undefined after warm-up at bar " +
                           std::to_string(r + warmup));
      fm.values(r, c) = v;
    }
  }
  return fm;
}

FeatureMatrix compute_feature_matrix(const BarSeries& bars, const std::vector<IndicatorSpec>& specs,
                                     Execution exec) {
  return compute_feature_matrix(Ohlc::from_bars(bars), specs, exec);
}

}  // namespace fxh
