#include "fxh/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "fxh/errors.hpp"

namespace fxh::arima {

namespace {

std::vector<double> diff_once(std::span<const double> x) {
  std::vector<double> out(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 1; i < x.size(); ++i) out[i - 1] = x[i] - x[i - 1];
  return out;
}

// Least squares for small dense systems: Cholesky on the normal equations, with a
// Householder QR fallback when the Gram matrix is badly conditioned.
class LeastSquares {
 public:
  LeastSquares(std::size_t rows, std::size_t cols) : m_(rows), k_(cols), x_(rows * cols), y_(rows) {}

  double& x(std::size_t r, std::size_t c) { return x_[r * k_ + c]; }
  double& y(std::size_t r) { return y_[r]; }

  std::vector<double> solve() const {
    if (auto beta = solve_normal_equations()) return *beta;
    return solve_qr();
  }

 private:
  std::optional<std::vector<double>> solve_normal_equations() const {
    std::vector<double> a(k_ * k_, 0.0);
    std::vector<double> b(k_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      const double* row = &x_[r * k_];
      for (std::size_t i = 0; i < k_; ++i) {
        b[i] += row[i] * y_[r];
        for (std::size_t j = 0; j <= i; ++j) a[i * k_ + j] += row[i] * row[j];
      }
    }
    double max_diag = 0.0;
    for (std::size_t i = 0; i < k_; ++i) max_diag = std::max(max_diag, a[i * k_ + i]);
    if (max_diag <= 0.0) return std::nullopt;
    // In-place lower Cholesky factor.
    for (std::size_t j = 0; j < k_; ++j) {
      double d = a[j * k_ + j];
      for (std::size_t p = 0; p < j; ++p) d -= a[j * k_ + p] * a[j * k_ + p];
      if (d <= 1e-10 * max_diag) return std::nullopt;
      d = std::sqrt(d);
      a[j * k_ + j] = d;
      for (std::size_t i = j + 1; i < k_; ++i) {
        double s = a[i * k_ + j];
        for (std::size_t p = 0; p < j; ++p) s -= a[i * k_ + p] * a[j * k_ + p];
        a[i * k_ + j] = s / d;
      }
    }
    std::vector<double> z(k_);
    for (std::size_t i = 0; i < k_; ++i) {
      double s = b[i];
      for (std::size_t p = 0; p < i; ++p) s -= a[i * k_ + p] * z[p];
      z[i] = s / a[i * k_ + i];
    }
    std::vector<double> beta(k_);
    for (std::size_t ii = k_; ii-- > 0;) {
      double s = z[ii];
      for (std::size_t p = ii + 1; p < k_; ++p) s -= a[p * k_ + ii] * beta[p];
      beta[ii] = s / a[ii * k_ + ii];
    }
    return beta;
  }

  std::vector<double> solve_qr() const {
    std::vector<double> r = x_;
    std::vector<double> qty = y_;
    std::vector<double> rdiag(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      double norm = 0.0;
      for (std::size_t i = j; i < m_; ++i) norm += r[i * k_ + j] * r[i * k_ + j];
      norm = std::sqrt(norm);
      if (norm == 0.0) throw NumericError("singular design matrix in least-squares fit");
      const double alpha = r[j * k_ + j] > 0 ? -norm : norm;
      std::vector<double> v(m_ - j);
      for (std::size_t i = j; i < m_; ++i) v[i - j] = r[i * k_ + j];
      v[0] -= alpha;
      double vnorm2 = 0.0;
      for (double e : v) vnorm2 += e * e;
      if (vnorm2 > 0.0) {
        for (std::size_t c = j; c < k_; ++c) {
          double s = 0.0;
          for (std::size_t i = j; i < m_; ++i) s += v[i - j] * r[i * k_ + c];
          s = 2.0 * s / vnorm2;
          for (std::size_t i = j; i < m_; ++i) r[i * k_ + c] -= s * v[i - j];
        }
        double s = 0.0;
        for (std::size_t i = j; i < m_; ++i) s += v[i - j] * qty[i];
        s = 2.0 * s / vnorm2;
        for (std::size_t i = j; i < m_; ++i) qty[i] -= s * v[i - j];
      }
      rdiag[j] = r[j * k_ + j];
    }
    double max_r = 0.0;
    for (double d : rdiag) max_r = std::max(max_r, std::abs(d));
    for (double d : rdiag)
      if (std::abs(d) <= 1e-9 * max_r) throw NumericError("singular design matrix in least-squares fit");
    std::vector<double> beta(k_);
    for (std::size_t ii = k_; ii-- > 0;) {
      double s = qty[ii];
      for (std::size_t c = ii + 1; c < k_; ++c) s -= r[ii * k_ + c] * beta[c];
      beta[ii] = s / r[ii * k_ + ii];
    }
    return beta;
  }

  std::size_t m_;
  std::size_t k_;
  std::vector<double> x_;
  std::vector<double> y_;
};

struct OlsResult {
  double c = 0.0;
  std::vector<double> phi;
  std::vector<double> residuals;  // t = p .. n-1
};

OlsResult fit_ar_ols(std::span<const double> w, int p) {
  const auto pp = static_cast<std::size_t>(p);
  const std::size_t rows = w.size() - pp;
  LeastSquares ls(rows, pp + 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + pp;
    ls.x(r, 0) = 1.0;
    for (std::size_t n = 1; n <= pp; ++n) ls.x(r, n) = w[t - n];
    ls.y(r) = w[t];
  }
  const auto beta = ls.solve();
  OlsResult out;
  out.c = beta[0];
  out.phi.assign(beta.begin() + 1, beta.end());
  out.residuals = css_residuals(w, out.c, out.phi, {});
  return out;
}

double sum_squares(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0, [](double a, double e) { return a + e * e; });
}

// Plain Nelder-Mead with standard coefficients.
template <typename F>
std::vector<double> nelder_mead(F&& f, std::vector<double> start, std::span<const double> step,
                                std::size_t max_iter) {
  const std::size_t k = start.size();
  std::vector<std::vector<double>> simplex(k + 1, start);
  for (std::size_t i = 0; i < k; ++i) simplex[i + 1][i] += step[i];
  std::vector<double> fv(k + 1);
  for (std::size_t i = 0; i <= k; ++i) fv[i] = f(simplex[i]);

  std::vector<std::size_t> idx(k + 1);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = idx.front();
    const std::size_t worst = idx.back();
    const std::size_t second = idx[k - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
    const double fspread = fv[worst] - fv[best];
    if (spread < 1e-11 && fspread <= 1e-14 * (std::abs(fv[best]) + 1e-300)) break;

    std::vector<double> centroid(k, 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[i][j] / static_cast<double>(k);
    }
    auto along = [&](double t) {
      std::vector<double> p(k);
      for (std::size_t j = 0; j < k; ++j) p[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      return p;
    };
    auto reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < fv[best]) {
      auto expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = std::move(reflected);
      fv[worst] = fr;
    } else {
      auto contracted = fr < fv[worst] ? along(-0.5) : along(0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = std::move(contracted);
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= k; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < k; ++j)
            simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  return simplex[static_cast<std::size_t>(it - fv.begin())];
}

}  // namespace

void ArimaOrder::validate() const {
  if (p < 0 || d < 0 || q < 0) throw std::invalid_argument("ARIMA orders must be non-negative");
  if (p + q == 0 && d == 0) throw std::invalid_argument("ARIMA(0,0,0) is not a model");
}

double ArimaModel::unconditional_mean() const {
  const double s = std::accumulate(phi.begin(), phi.end(), 0.0);
  return c / (1.0 - s);
}

std::vector<double> difference(std::span<const double> series, int d) {
  if (d < 0) throw std::invalid_argument("difference: d must be >= 0");
  if (series.size() <= static_cast<std::size_t>(d))
    throw DataError("difference: series of length " + std::to_string(series.size()) +
                    " cannot be differenced " + std::to_string(d) + " times");
  std::vector<double> out(series.begin(), series.end());
  for (int k = 0; k < d; ++k) out = diff_once(out);
  return out;
}

std::vector<double> undifference(std::span<const double> diffed, std::span<const double> seed_values,
                                 int d) {
  if (d < 0) throw std::invalid_argument("undifference: d must be >= 0");
  if (seed_values.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("undifference: expected " + std::to_string(d) + " seed values, got " +
                                std::to_string(seed_values.size()));
  // heads[k] = first element of the k-th difference of the seed.
  std::vector<double> heads;
  std::vector<double> level(seed_values.begin(), seed_values.end());
  for (int k = 0; k < d; ++k) {
    heads.push_back(level.front());
    level = diff_once(level);
  }
  std::vector<double> current(diffed.begin(), diffed.end());
  for (int k = d - 1; k >= 0; --k) {
    std::vector<double> up(current.size() + 1);
    up[0] = heads[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < current.size(); ++i) up[i + 1] = up[i] + current[i];
    current = std::move(up);
  }
  return current;
}

bool is_stationary(std::span<const double> phi) {
  std::vector<double> a(phi.begin(), phi.end());
  for (std::size_t k = a.size(); k >= 1; --k) {
    const double kappa = a[k - 1];
    if (!(std::abs(kappa) < 1.0)) return false;
    std::vector<double> b(k - 1);
    for (std::size_t j = 1; j < k; ++j) b[j - 1] = (a[j - 1] + kappa * a[k - j - 1]) / (1.0 - kappa * kappa);
    a = std::move(b);
  }
  return true;
}

std::vector<double> css_residuals(std::span<const double> w, double c, std::span<const double> phi,
                                  std::span<const double> theta) {
  const std::size_t p = phi.size();
  const std::size_t q = theta.size();
  std::vector<double> eps(w.size(), 0.0);
  for (std::size_t t = p; t < w.size(); ++t) {
    double pred = c;
    for (std::size_t n = 1; n <= p; ++n) pred += phi[n - 1] * w[t - n];
    for (std::size_t n = 1; n <= q && n <= t; ++n) pred += theta[n - 1] * eps[t - n];
    eps[t] = w[t] - pred;
  }
  return {eps.begin() + static_cast<std::ptrdiff_t>(p), eps.end()};
}

ArimaModel fit(std::span<const double> series, const ArimaOrder& order, FitMethod method) {
  order.validate();
  const auto p = static_cast<std::size_t>(order.p);
  const auto q = static_cast<std::size_t>(order.q);
  const auto d = static_cast<std::size_t>(order.d);
  if (series.size() < p + q + d + 2)
    throw DataError("ARIMA fit needs at least " + std::to_string(p + q + d + 2) + " observations");
  if (method == FitMethod::ols && q > 0)
    throw std::invalid_argument("OLS estimation applies to pure AR models only");
  for (double v : series)
    if (!std::isfinite(v)) throw NumericError("ARIMA fit: series contains non-finite values");

  const std::vector<double> w = difference(series, order.d);
  ArimaModel m;
  m.order = order;
  std::vector<double> resid;

  const bool use_ols = method == FitMethod::ols || (method == FitMethod::automatic && q == 0);
  if (use_ols) {
    OlsResult ols = fit_ar_ols(w, order.p);
    m.c = ols.c;
    m.phi = std::move(ols.phi);
    resid = std::move(ols.residuals);
  } else {
    // Start from Hannan-Rissanen: a long AR supplies innovation estimates, then
    // regress on lagged values and lagged innovations.
    std::vector<double> start(1 + p + q, 0.0);
    start[0] = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    const std::size_t long_order = std::max<std::size_t>(p + q, std::min<std::size_t>(20, w.size() / 10));
    if (q > 0 && w.size() > 2 * long_order + p + q + 2) {
      try {
        const OlsResult longar = fit_ar_ols(w, static_cast<int>(long_order));
        std::vector<double> ehat(w.size(), 0.0);
        std::copy(longar.residuals.begin(), longar.residuals.end(),
                  ehat.begin() + static_cast<std::ptrdiff_t>(long_order));
        const std::size_t t0 = long_order + std::max(p, q);
        LeastSquares ls(w.size() - t0, 1 + p + q);
        for (std::size_t t = t0; t < w.size(); ++t) {
          const std::size_t r = t - t0;
          ls.x(r, 0) = 1.0;
          for (std::size_t n = 1; n <= p; ++n) ls.x(r, n) = w[t - n];
          for (std::size_t n = 1; n <= q; ++n) ls.x(r, p + n) = ehat[t - n];
          ls.y(r) = w[t];
        }
        start = ls.solve();
      } catch (const NumericError&) {
        // keep the mean-only start
      }
    } else if (q == 0) {
      const OlsResult ols = fit_ar_ols(w, order.p);
      start[0] = ols.c;
      std::copy(ols.phi.begin(), ols.phi.end(), start.begin() + 1);
    }

    auto objective = [&](const std::vector<double>& v) {
      std::span<const double> all(v);
      const auto e = css_residuals(w, all[0], all.subspan(1, p), all.subspan(1 + p, q));
      const double ss = sum_squares(e);
      return std::isfinite(ss) ? ss : std::numeric_limits<double>::max();
    };
    double scale = 0.0;
    for (double v : w) scale += (v - start[0]) * (v - start[0]);
    scale = std::sqrt(scale / static_cast<double>(w.size()));
    std::vector<double> step(start.size(), 0.1);
    step[0] = 0.1 * (scale > 0.0 ? scale : 1.0);
    std::vector<double> best = nelder_mead(objective, start, step, 4000 * start.size());
    // Restart from the optimum with a small simplex until it stops moving.
    for (int restart = 0; restart < 5; ++restart) {
      for (auto& s : step) s *= 0.01;
      auto again = nelder_mead(objective, best, step, 4000 * start.size());
      const bool improved = objective(again) < objective(best);
      if (improved) best = std::move(again);
      if (!improved) break;
    }
    m.c = best[0];
    m.phi.assign(best.begin() + 1, best.begin() + 1 + static_cast<std::ptrdiff_t>(p));
    m.theta.assign(best.begin() + 1 + static_cast<std::ptrdiff_t>(p), best.end());
    resid = css_residuals(w, m.c, m.phi, m.theta);
  }

  m.sigma2 = resid.empty() ? 0.0 : sum_squares(resid) / static_cast<double>(resid.size());
  if (!std::isfinite(m.sigma2) || !std::isfinite(m.c))
    throw NumericError("ARIMA fit diverged");
  m.last_values.assign(series.end() - static_cast<std::ptrdiff_t>(p + d), series.end());
  const std::size_t nq = std::min(q, resid.size());
  m.last_residuals.assign(q - nq, 0.0);
  m.last_residuals.insert(m.last_residuals.end(), resid.end() - static_cast<std::ptrdiff_t>(nq), resid.end());
  m.n_obs = series.size();
  m.stationary = is_stationary(m.phi);
  if (!m.stationary)
    m.warnings.push_back("fitted AR polynomial has a root on or inside the unit circle");
  return m;
}

std::vector<double> forecast(const ArimaModel& m, int steps) {
  if (steps < 1) throw std::invalid_argument("forecast: steps must be >= 1");
  const std::size_t p = m.phi.size();
  const std::size_t q = m.theta.size();
  const auto d = static_cast<std::size_t>(m.order.d);

  // Last value of every differencing level 0..d-1, and the p most recent w.
  std::vector<double> level_last(d);
  std::vector<double> level(m.last_values.begin(), m.last_values.end());
  for (std::size_t k = 0; k < d; ++k) {
    level_last[k] = level.back();
    level = diff_once(level);
  }
  std::vector<double> w_hist = std::move(level);  // length p
  std::vector<double> eps_hist = m.last_residuals;  // length q, oldest first

  std::vector<double> out(static_cast<std::size_t>(steps));
  for (std::size_t h = 0; h < out.size(); ++h) {
    double w = m.c;
    for (std::size_t n = 1; n <= p; ++n) w += m.phi[n - 1] * w_hist[w_hist.size() - n];
    for (std::size_t n = 1; n <= q; ++n) w += m.theta[n - 1] * eps_hist[eps_hist.size() - n];
    w_hist.push_back(w);
    eps_hist.push_back(0.0);
    double v = w;
    for (std::size_t k = d; k-- > 0;) {
      v = level_last[k] + v;
      level_last[k] = v;
    }
    out[h] = v;
  }
  return out;
}

ArimaModel observe(const ArimaModel& m, double value) {
  ArimaModel next = m;
  next.n_obs = m.n_obs + 1;
  if (m.phi.empty() && m.theta.empty() && m.order.d == 0) return next;  // zero model

  const std::size_t p = m.phi.size();
  const std::size_t q = m.theta.size();
  const auto d = static_cast<std::size_t>(m.order.d);

  std::vector<double> tail = m.last_values;
  tail.push_back(value);
  const std::vector<double> w = difference(tail, static_cast<int>(d));  // length p + 1
  double pred = m.c;
  for (std::size_t n = 1; n <= p; ++n) pred += m.phi[n - 1] * w[w.size() - 1 - n];
  for (std::size_t n = 1; n <= q; ++n) pred += m.theta[n - 1] * m.last_residuals[q - n];
  const double eps = w.back() - pred;

  next.last_values.assign(tail.end() - static_cast<std::ptrdiff_t>(p + d), tail.end());
  if (q > 0) {
    next.last_residuals.erase(next.last_residuals.begin());
    next.last_residuals.push_back(eps);
  }
  return next;
}

ArimaModel zero_model() {
  ArimaModel m;
  m.order = {0, 0, 0};
  m.warnings.push_back("identity residual model: forecasts are zero");
  return m;
}

}  // namespace fxh::arima
