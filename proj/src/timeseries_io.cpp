#include "fxh/timeseries_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fxh/errors.hpp"

namespace fxh {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

}  // namespace

bool Bar::is_valid() const {
  const bool finite = std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
                      std::isfinite(close) && std::isfinite(volume);
  return finite && low <= std::min(open, close) && high >= std::max(open, close) && low <= high &&
         volume >= 0.0;
}

BarSeries::BarSeries(std::vector<Bar> bars, std::int64_t interval_seconds)
    : bars_(std::move(bars)), interval_seconds_(interval_seconds) {
  if (interval_seconds_ < 0) throw DataError("interval_seconds must be positive");
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    if (!bars_[i].is_valid())
      throw DataError("bar " + std::to_string(i) + " violates OHLC ordering or has negative volume");
    if (i > 0 && bars_[i].timestamp <= bars_[i - 1].timestamp)
      throw DataError("timestamps not strictly increasing at bar " + std::to_string(i));
  }
  if (interval_seconds_ == 0) {
    std::int64_t g = 0;
    for (std::size_t i = 1; i < bars_.size(); ++i)
      g = std::gcd(g, bars_[i].timestamp - bars_[i - 1].timestamp);
    interval_seconds_ = g > 0 ? g : 1;
  } else {
    for (std::size_t i = 1; i < bars_.size(); ++i) {
      if ((bars_[i].timestamp - bars_[0].timestamp) % interval_seconds_ != 0)
        throw DataError("bar " + std::to_string(i) + " is off the " +
                        std::to_string(interval_seconds_) + "s grid");
    }
  }
}

std::vector<double> BarSeries::closes() const {
  std::vector<double> out(bars_.size());
  std::transform(bars_.begin(), bars_.end(), out.begin(), [](const Bar& b) { return b.close; });
  return out;
}

std::vector<std::int64_t> BarSeries::timestamps() const {
  std::vector<std::int64_t> out(bars_.size());
  std::transform(bars_.begin(), bars_.end(), out.begin(),
                 [](const Bar& b) { return b.timestamp; });
  return out;
}

BarSeries BarSeries::slice(std::size_t begin, std::size_t end) const {
  BarSeries out;
  out.bars_.assign(bars_.begin() + static_cast<std::ptrdiff_t>(begin),
                   bars_.begin() + static_cast<std::ptrdiff_t>(end));
  out.interval_seconds_ = interval_seconds_;
  return out;
}

std::optional<std::int64_t> parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) return std::nullopt;
  const bool all_digits = std::all_of(text.begin(), text.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-';
  });
  if (all_digits) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep1 = 0, sep2 = 0, t = 0;
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%d%c%u%c%u%c%u:%u%n", &y, &sep1, &mo, &sep2, &d, &t, &h,
                            &mi, &consumed);
  if (n < 8 || sep1 != sep2 || (sep1 != '-' && sep1 != '.') || (t != 'T' && t != ' '))
    return std::nullopt;
  std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == ':') {
    int more = 0;
    if (std::sscanf(rest.c_str(), ":%u%n", &s, &more) != 1) return std::nullopt;
    rest = rest.substr(static_cast<std::size_t>(more));
  }
  if (!rest.empty() && rest != "Z" && rest != "+00:00") return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

BarSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  const auto expected = split_fields(CsvSchema::kHeader);
  if (header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), header.begin(), [](const auto& a, const auto& b) {
        std::string lb = b;
        std::transform(lb.begin(), lb.end(), lb.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return a == lb;
      })) {
    throw DataError(path.string() + ": header must start with '" + CsvSchema::kHeader + "'");
  }

  std::vector<Bar> bars;
  std::vector<std::size_t> bad_rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    Bar bar;
    const auto ts = f.size() >= 6 ? parse_timestamp(f[0]) : std::nullopt;
    if (!ts || !parse_double(f[1], bar.open) || !parse_double(f[2], bar.high) ||
        !parse_double(f[3], bar.low) || !parse_double(f[4], bar.close) ||
        !parse_double(f[5], bar.volume)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    bar.timestamp = *ts;
    if (!bar.is_valid()) {
      bad_rows.push_back(line_no);
      continue;
    }
    if (!bars.empty() && bar.timestamp <= bars.back().timestamp) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": timestamp not strictly increasing");
    }
    bars.push_back(bar);
  }
  if (!bad_rows.empty()) {
    std::string msg = path.string() + ": OHLC ordering violated on line(s)";
    for (std::size_t i = 0; i < bad_rows.size() && i < 20; ++i) msg += " " + std::to_string(bad_rows[i]);
    if (bad_rows.size() > 20) msg += " ... (" + std::to_string(bad_rows.size()) + " total)";
    throw DataError(msg);
  }
  return BarSeries(std::move(bars), schema.interval_seconds);
}

void save_csv(const BarSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << CsvSchema::kHeader << '\n';
  char buf[256];
  for (const Bar& b : series.bars()) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(b.timestamp), b.open, b.high, b.low, b.close, b.volume);
    out << buf;
  }
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw DataError("test_fraction must lie in (0,1)");
  if (!(spec.val_fraction_of_train > 0.0 && spec.val_fraction_of_train < 1.0))
    throw DataError("val_fraction_of_train must lie in (0,1)");
  if (n < 10) throw DataError("series of length " + std::to_string(n) + " is too short to split");
  SplitSizes s;
  s.test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  s.val = static_cast<std::size_t>(
      std::llround(spec.val_fraction_of_train * static_cast<double>(n - s.test)));
  if (s.test == 0 || s.val == 0 || s.test + s.val >= n)
    throw DataError("series of length " + std::to_string(n) + " cannot populate all three splits");
  s.train = n - s.test - s.val;
  return s;
}

BarSplits chronological_split(const BarSeries& series, const SplitSpec& spec) {
  const SplitSizes s = split_sizes(series.size(), spec);
  return {series.slice(0, s.train), series.slice(s.train, s.train + s.val),
          series.slice(s.train + s.val, series.size())};
}

std::vector<std::size_t> MinMaxScaler::degenerate_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < size(); ++c)
    if (degenerate(c)) out.push_back(c);
  return out;
}

MinMaxScaler fit_minmax(const Matrix& train) {
  if (train.rows < 2) throw DataError("fit_minmax needs at least 2 rows");
  MinMaxScaler s;
  s.x_min.assign(train.cols, 0.0);
  s.x_max.assign(train.cols, 0.0);
  for (std::size_t c = 0; c < train.cols; ++c) {
    double lo = train(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < train.rows; ++r) {
      lo = std::min(lo, train(r, c));
      hi = std::max(hi, train(r, c));
    }
    s.x_min[c] = lo;
    s.x_max[c] = hi;
  }
  return s;
}

Matrix apply_minmax(const MinMaxScaler& scaler, const Matrix& x) {
  if (!scaler.fitted()) throw std::invalid_argument("scaler is not fitted");
  if (x.cols != scaler.size())
    throw std::invalid_argument("apply_minmax: matrix has " + std::to_string(x.cols) +
                                " columns, scaler has " + std::to_string(scaler.size()));
  Matrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      out(r, c) = scaler.degenerate(c)
                      ? 0.0
                      : (x(r, c) - scaler.x_min[c]) / (scaler.x_max[c] - scaler.x_min[c]);
    }
  }
  return out;
}

std::vector<double> apply_minmax(const MinMaxScaler& scaler, std::span<const double> values,
                                 std::size_t column) {
  if (!scaler.fitted()) throw std::invalid_argument("scaler is not fitted");
  if (column >= scaler.size()) throw std::invalid_argument("apply_minmax: column out of range");
  std::vector<double> out(values.size(), 0.0);
  if (scaler.degenerate(column)) return out;
  const double lo = scaler.x_min[column];
  const double span = scaler.x_max[column] - lo;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / span;
  return out;
}

std::vector<double> invert_minmax(const MinMaxScaler& scaler, std::span<const double> y_norm,
                                  std::size_t column) {
  if (!scaler.fitted()) throw std::invalid_argument("invert_minmax: scaler is not fitted");
  if (column >= scaler.size()) throw std::invalid_argument("invert_minmax: column out of range");
  const double lo = scaler.x_min[column];
  const double span = scaler.x_max[column] - lo;
  std::vector<double> out(y_norm.size());
  for (std::size_t i = 0; i < y_norm.size(); ++i) out[i] = y_norm[i] * span + lo;
  return out;
}

WindowedDataset WindowedDataset::subset(std::span<const std::size_t> indices) const {
  WindowedDataset out;
  out.samples = indices.size();
  out.window = window;
  out.horizon = horizon;
  out.n_features = n_features;
  out.n_exo = n_exo;
  out.x.reserve(indices.size() * window * n_features);
  out.z.reserve(indices.size() * window * n_exo);
  for (std::size_t i : indices) {
    auto xw = x_window(i);
    auto zw = z_window(i);
    out.x.insert(out.x.end(), xw.begin(), xw.end());
    out.z.insert(out.z.end(), zw.begin(), zw.end());
    out.y.push_back(y[i]);
    out.target_row.push_back(target_row[i]);
  }
  return out;
}

WindowedDataset make_windows(const Matrix& features, const Matrix& exogenous,
                             std::span<const double> target, std::size_t window,
                             std::size_t horizon) {
  if (window < 1 || horizon < 1) throw std::invalid_argument("window and horizon must be >= 1");
  const std::size_t n = features.rows;
  if (exogenous.rows != n || target.size() != n)
    throw std::invalid_argument("make_windows: features, exogenous and target rows differ");
  if (n < window + horizon)
    throw DataError("make_windows: " + std::to_string(n) + " rows cannot fill a window of " +
                    std::to_string(window) + " with horizon " + std::to_string(horizon));
  WindowedDataset ds;
  ds.samples = n - window - horizon + 1;
  ds.window = window;
  ds.horizon = horizon;
  ds.n_features = features.cols;
  ds.n_exo = exogenous.cols;
  ds.x.resize(ds.samples * window * ds.n_features);
  ds.z.resize(ds.samples * window * ds.n_exo);
  ds.y.resize(ds.samples);
  ds.target_row.resize(ds.samples);
  for (std::size_t i = 0; i < ds.samples; ++i) {
    std::copy_n(features.data.begin() + static_cast<std::ptrdiff_t>(i * ds.n_features),
                window * ds.n_features,
                ds.x.begin() + static_cast<std::ptrdiff_t>(i * window * ds.n_features));
    std::copy_n(exogenous.data.begin() + static_cast<std::ptrdiff_t>(i * ds.n_exo),
                window * ds.n_exo, ds.z.begin() + static_cast<std::ptrdiff_t>(i * window * ds.n_exo));
    ds.target_row[i] = i + window + horizon - 1;
    ds.y[i] = target[ds.target_row[i]];
  }
  return ds;
}

}  // namespace fxh
