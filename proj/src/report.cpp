#include "fxh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "fxh/errors.hpp"
#include "fxh/metrics.hpp"

namespace fxh {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json metrics_json(const Metrics& m) {
  return {{"rmse", num(m.rmse)}, {"mape_percent", num(m.mape_percent)}, {"da", num(m.da)}};
}

json provenance_json(const Provenance& p) {
  return {{"data_crc32", p.data_crc},
          {"weights_crc32", p.weights_crc},
          {"residuals_crc32", p.residuals_crc},
          {"config_crc32", p.config_crc}};
}

bool close_enough(double stored, double recomputed) {
  if (std::isnan(recomputed)) return std::isnan(stored);
  return std::fabs(stored - recomputed) <= 1e-12 * std::max(1.0, std::fabs(recomputed));
}

}  // namespace

json report_to_json(const ForecastReport& r) {
  return {
      {"schema", kReportSchema},
      {"config", r.config},
      {"model", {{"residual_model", r.arima_summary}, {"used_arima", r.used_arima}}},
      {"vectors",
       {{"timestamp", r.timestamps},
        {"y_true", vec(r.y_true)},
        {"y_arnn", vec(r.y_arnn)},
        {"r_hat", vec(r.r_hat)},
        {"y_hat", vec(r.y_hat)},
        {"y_true_norm", vec(r.y_true_norm)},
        {"y_arnn_norm", vec(r.y_arnn_norm)},
        {"y_hat_norm", vec(r.y_hat_norm)}}},
      {"metrics",
       {{"hybrid", metrics_json(r.hybrid)},
        {"arnn", metrics_json(r.arnn)},
        {"hybrid_normalized", metrics_json(r.hybrid_norm)},
        {"arnn_normalized", metrics_json(r.arnn_norm)}}},
      {"train_seconds", r.train_seconds},
      {"runtime_seconds", r.runtime_seconds},
      {"provenance", provenance_json(r.provenance)},
      {"warnings", r.warnings},
  };
}

std::vector<std::string> validate_report_json(const json& j) {
  std::vector<std::string> errs;
  auto need = [&](const json& obj, const std::string& path, const char* key, json::value_t type) -> const json* {
    if (!obj.is_object() || !obj.contains(key)) {
      errs.push_back("missing " + path + "." + key);
      return nullptr;
    }
    const json& v = obj.at(key);
    const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
    if (!ok) {
      errs.push_back(path + "." + key + " has the wrong type");
      return nullptr;
    }
    return &v;
  };

  if (const json* s = need(j, "report", "schema", json::value_t::string); s && *s != kReportSchema)
    errs.push_back("unexpected schema " + s->dump());
  need(j, "report", "config", json::value_t::object);
  need(j, "report", "model", json::value_t::object);
  need(j, "report", "runtime_seconds", json::value_t::number_float);
  if (const json* p = need(j, "report", "provenance", json::value_t::object)) {
    for (const char* k : {"data_crc32", "weights_crc32", "residuals_crc32", "config_crc32"})
      if (!p->contains(k) || !p->at(k).is_number_unsigned()) errs.push_back("provenance." + std::string(k) + " missing");
  }

  const json* v = need(j, "report", "vectors", json::value_t::object);
  const json* m = need(j, "report", "metrics", json::value_t::object);
  if (!v || !m) return errs;

  std::map<std::string, std::vector<double>> cols;
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const char* k : {"y_true", "y_arnn", "r_hat", "y_hat", "y_true_norm", "y_arnn_norm", "y_hat_norm"}) {
    const json* a = need(*v, "vectors", k, json::value_t::array);
    if (!a) continue;
    std::vector<double> out;
    for (const auto& e : *a) {
      if (!e.is_number()) {
        errs.push_back(std::string("vectors.") + k + " holds a non-number");
        break;
      }
      out.push_back(e.get<double>());
    }
    if (n == std::numeric_limits<std::size_t>::max()) n = out.size();
    else if (out.size() != n) errs.push_back(std::string("vectors.") + k + " has a different length");
    cols[k] = std::move(out);
  }
  if (const json* t = need(*v, "vectors", "timestamp", json::value_t::array); t && t->size() != n)
    errs.push_back("vectors.timestamp has a different length");
  if (!errs.empty()) return errs;
  if (n < 2) {
    errs.push_back("report holds fewer than two predictions");
    return errs;
  }

  const std::pair<const char*, std::pair<const char*, const char*>> groups[] = {
      {"hybrid", {"y_hat", "y_true"}},
      {"arnn", {"y_arnn", "y_true"}},
      {"hybrid_normalized", {"y_hat_norm", "y_true_norm"}},
      {"arnn_normalized", {"y_arnn_norm", "y_true_norm"}},
  };
  for (const auto& [name, pair] : groups) {
    const json* g = need(*m, "metrics", name, json::value_t::object);
    if (!g) continue;
    const Metrics re = compute_metrics(cols[pair.first], cols[pair.second]);
    const std::pair<const char*, double> vals[] = {{"rmse", re.rmse}, {"mape_percent", re.mape_percent}, {"da", re.da}};
    for (const auto& [key, expect] : vals) {
      if (!g->contains(key)) {
        errs.push_back(std::string("metrics.") + name + "." + key + " missing");
        continue;
      }
      const json& x = g->at(key);
      const double stored = x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
      if (!close_enough(stored, expect))
        errs.push_back(std::string("metrics.") + name + "." + key + " does not match the stored vectors");
    }
  }
  return errs;
}

std::string render_svg(const ForecastReport& r, std::size_t points) {
  const std::size_t n = r.y_true.size();
  const std::size_t k = std::min(n, std::max<std::size_t>(points, 2));
  const std::size_t begin = n - k;
  const double W = 960, H = 420, ml = 70, mr = 20, mt = 30, mb = 40;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* s : {&r.y_true, &r.y_arnn, &r.y_hat})
    for (std::size_t i = begin; i < n; ++i)
      if (std::isfinite((*s)[i])) {
        lo = std::min(lo, (*s)[i]);
        hi = std::max(hi, (*s)[i]);
      }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto px = [&](std::size_t i) { return ml + (W - ml - mr) * static_cast<double>(i - begin) / std::max<double>(1.0, static_cast<double>(k - 1)); };
  auto py = [&](double v) { return mt + (H - mt - mb) * (hi - v) / (hi - lo); };
  auto path = [&](const std::vector<double>& s) {
    std::string d;
    char buf[64];
    bool pen = false;
    for (std::size_t i = begin; i < n; ++i) {
      if (!std::isfinite(s[i])) {
        pen = false;
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%c%.2f,%.2f ", pen ? 'L' : 'M', px(i), py(s[i]));
      d += buf;
      pen = true;
    }
    return d;
  };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                W, H, W, H);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf), "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#999\"/>\n",
                ml, mt, W - ml - mr, H - mt - mb);
  svg += buf;
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">%.5g</text>\n",
                  ml - 6, py(v) + 4, v);
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"18\" font-size=\"13\" font-family=\"sans-serif\">last %zu test predictions "
                "(RMSE hybrid %.4g, network %.4g)</text>\n",
                ml, k, r.hybrid.rmse, r.arnn.rmse);
  svg += buf;
  const std::pair<const std::vector<double>*, const char*> lines[] = {
      {&r.y_true, "#222222"}, {&r.y_arnn, "#1f77b4"}, {&r.y_hat, "#d62728"}};
  for (const auto& [s, color] : lines) {
    if (s == &r.y_hat && !r.used_arima) continue;
    svg += "<path fill=\"none\" stroke-width=\"1.2\" stroke=\"" + std::string(color) + "\" d=\"" + path(*s) + "\"/>\n";
  }
  const char* names[] = {"truth", "network", "network + ARIMA"};
  for (int i = 0; i < 3; ++i) {
    if (i == 2 && !r.used_arima) continue;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" font-family=\"sans-serif\">%s</text>\n",
                  ml + 10 + 150.0 * i, H - 15, ml + 35 + 150.0 * i, H - 15, lines[i].second, ml + 40 + 150.0 * i,
                  H - 11, names[i]);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

json benchmark_to_json(const BenchmarkGrid& g) {
  json cells = json::array();
  for (const auto& c : g.cells) {
    json e = {{"variant", c.cell.variant()},
              {"network", to_string(c.cell.kind)},
              {"arima", c.cell.arima},
              {"denoised", c.cell.denoised},
              {"ok", c.ok}};
    if (c.ok) {
      e["metrics"] = metrics_json(c.report.hybrid);
      e["metrics_normalized"] = metrics_json(c.report.hybrid_norm);
      e["train_seconds"] = c.train_seconds;
      e["residual_model"] = c.report.arima_summary;
    } else {
      e["error"] = c.error;
    }
    cells.push_back(e);
  }
  return {{"schema", kBenchmarkSchema},
          {"config", g.cells.empty() || !g.cells.front().ok ? json(nullptr) : g.cells.front().report.config},
          {"cells", cells},
          {"ranking_by_rmse", g.ranking}};
}

std::string benchmark_table(const BenchmarkGrid& g) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-9s %14s %14s %10s %8s %10s\n", "model", "denoised", "RMSE", "RMSE(norm)",
                "MAPE %", "DA %", "train s");
  out += buf;
  for (const auto& c : g.cells) {
    if (!c.ok) {
      std::snprintf(buf, sizeof(buf), "%-12s %-9s failed: ", c.cell.variant().c_str(), c.cell.denoised ? "yes" : "no");
      out += buf + c.error + "\n";
      continue;
    }
    const Metrics& m = c.report.hybrid;
    std::snprintf(buf, sizeof(buf), "%-12s %-9s %14.6g %14.6g %10.4f %8.2f %10.2f\n", c.cell.variant().c_str(),
                  c.cell.denoised ? "yes" : "no", m.rmse, c.report.hybrid_norm.rmse, m.mape_percent, 100.0 * m.da,
                  c.train_seconds);
    out += buf;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace fxh
