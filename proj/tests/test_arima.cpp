#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fxh/arima.hpp"
#include "fxh/errors.hpp"

using namespace fxh;
using namespace fxh::arima;

namespace {

std::vector<double> simulate_ar(const std::vector<double>& phi, double sigma, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  const std::size_t burn = 500;
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = phi.size(); t < x.size(); ++t) {
    double v = g(rng);
    for (std::size_t k = 0; k < phi.size(); ++k) v += phi[k] * x[t - 1 - k];
    x[t] = v;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

// Normal equations with an intercept, solved by Gauss-Jordan with partial pivoting.
std::vector<double> normal_equations_ar(const std::vector<double>& x, int p) {
  const std::size_t k = static_cast<std::size_t>(p) + 1;
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t t = static_cast<std::size_t>(p); t < x.size(); ++t) {
    std::vector<double> row{1.0};
    for (int j = 1; j <= p; ++j) row.push_back(x[t - static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i][j] += row[i] * row[j];
      a[i][k] += row[i] * x[t];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> b(k);
  for (std::size_t i = 0; i < k; ++i) b[i] = a[i][k] / a[i][i];
  return b;  // {c, phi_1..phi_p}
}

}  // namespace

TEST(Difference, HandValues) {
  EXPECT_EQ(difference(std::vector<double>{1, 3, 6}, 1), (std::vector<double>{2, 3}));
  EXPECT_EQ(difference(std::vector<double>{1, 3, 6, 10}, 2), (std::vector<double>{1, 1}));
  const std::vector<double> s{4, -1, 2.5};
  EXPECT_EQ(difference(s, 0), s);
  EXPECT_THROW(difference(std::vector<double>{1, 2}, 2), DataError);
}

TEST(Difference, UndifferenceRoundTrip) {
  const std::vector<double> s{1, 3, 6, 10};
  EXPECT_EQ(undifference(difference(s, 1), std::vector<double>{1}, 1), s);
  EXPECT_EQ(undifference(difference(s, 2), std::vector<double>{1, 3}, 2), s);
  EXPECT_EQ(undifference(std::vector<double>(4, 0.0), std::vector<double>{5}, 1), (std::vector<double>(5, 5.0)));
  EXPECT_THROW(undifference(std::vector<double>{1}, std::vector<double>{}, 1), std::invalid_argument);

  std::mt19937_64 rng(17);
  std::uniform_int_distribution<long> u(-(1L << 30), 1L << 30);
  for (int d = 0; d <= 3; ++d) {
    std::vector<double> x(200);
    for (double& v : x) v = static_cast<double>(u(rng));
    const std::vector<double> seed(x.begin(), x.begin() + d);
    EXPECT_EQ(undifference(difference(x, d), seed, d), x) << "d=" << d;
  }
}

TEST(Forecast, ArOneHandValues) {
  ArimaModel m;
  m.order = {1, 0, 0};
  m.phi = {0.5};
  m.last_values = {2.0};
  const auto f = forecast(m, 20);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  // The 20th step is exactly 2 * 0.5^20.
  EXPECT_EQ(f[19], 2.0 * std::pow(0.5, 20));
  for (std::size_t h = 1; h < f.size(); ++h) EXPECT_LE(std::fabs(f[h]), std::fabs(f[h - 1]));
  EXPECT_THROW(forecast(m, 0), std::invalid_argument);
}

TEST(Forecast, MaOneHandValues) {
  ArimaModel m;
  m.order = {0, 0, 1};
  m.theta = {0.4};
  m.last_residuals = {1.0};
  const auto f = forecast(m, 2);
  EXPECT_DOUBLE_EQ(f[0], 0.4);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(Forecast, ConvergesToMeanForFittedArOne) {
  auto x = simulate_ar({0.7}, 1.0, 2000, 4);
  for (double& v : x) v += 3.0;
  const ArimaModel m = fit(x, {1, 0, 0});
  const double mu = m.unconditional_mean();
  EXPECT_NEAR(mu, 3.0, 0.3);
  const auto f = forecast(m, 60);
  for (std::size_t h = 1; h < f.size(); ++h) EXPECT_LE(std::fabs(f[h] - mu), std::fabs(f[h - 1] - mu) + 1e-15);
  EXPECT_NEAR(f.back(), mu, 1e-6);
}

TEST(Observe, AdvancesStateWithoutMutating) {
  ArimaModel m;
  m.order = {1, 0, 1};
  m.phi = {0.5};
  m.theta = {0.4};
  m.last_values = {2.0};
  m.last_residuals = {1.0};
  const ArimaModel next = observe(m, 1.0);
  EXPECT_EQ(m.last_values, std::vector<double>{2.0});
  EXPECT_EQ(next.last_values, std::vector<double>{1.0});
  // prediction was 0.5*2 + 0.4*1 = 1.4, so the innovation is -0.4
  EXPECT_NEAR(next.last_residuals[0], -0.4, 1e-15);
  EXPECT_EQ(next.n_obs, m.n_obs + 1);

  const ArimaModel z = zero_model();
  EXPECT_EQ(forecast(observe(z, 3.0), 2), (std::vector<double>{0.0, 0.0}));
  EXPECT_FALSE(z.warnings.empty());
}

TEST(Fit, RecoversArThreeAndMatchesNormalEquations) {
  const std::vector<double> phi{0.5, -0.3, 0.2};
  const auto x = simulate_ar(phi, 1.0, 10000, 2019);
  const ArimaModel m = fit(x, {3, 0, 0});
  ASSERT_EQ(m.phi.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(m.phi[k], phi[k], 0.05);
  EXPECT_GE(m.sigma2, 0.95);
  EXPECT_LE(m.sigma2, 1.05);
  EXPECT_TRUE(m.stationary);

  const auto oracle = normal_equations_ar(x, 3);
  EXPECT_NEAR(m.c, oracle[0], 1e-6);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(m.phi[k], oracle[k + 1], 1e-6);
}

TEST(Fit, WhiteNoiseHasNoAutoregression) {
  const auto x = simulate_ar({}, 1.0, 5000, 8);
  const ArimaModel m = fit(x, {1, 0, 0});
  EXPECT_NEAR(m.phi[0], 0.0, 0.05);
}

TEST(Fit, ConstantSeriesIsSingular) {
  EXPECT_THROW(fit(std::vector<double>(100, 2.5), {1, 0, 0}), NumericError);
}

TEST(Fit, RejectsBadInput) {
  EXPECT_THROW(fit(std::vector<double>(4, 1.0), {3, 0, 0}), DataError);
  EXPECT_THROW(fit(std::vector<double>(100, 1.0), {0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(fit(std::vector<double>(100, 1.0), {-1, 0, 0}), std::invalid_argument);
  auto x = simulate_ar({0.5}, 1.0, 100, 1);
  x[50] = std::nan("");
  EXPECT_THROW(fit(x, {1, 0, 0}), NumericError);
  EXPECT_THROW(fit(simulate_ar({0.5}, 1.0, 100, 1), {1, 0, 1}, FitMethod::ols), std::invalid_argument);
}

TEST(Fit, OlsAndCssAgreeOnPureAr) {
  const auto x = simulate_ar({0.5, -0.3, 0.2}, 1.0, 10000, 77);
  const ArimaModel a = fit(x, {3, 0, 0}, FitMethod::ols);
  const ArimaModel b = fit(x, {3, 0, 0}, FitMethod::css);
  double dist = std::fabs(a.c - b.c);
  for (int k = 0; k < 3; ++k) dist = std::max(dist, std::fabs(a.phi[k] - b.phi[k]));
  EXPECT_LT(dist, 1e-6);
}

TEST(Fit, CssRecoversMaOne) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<double> x(6000);
  double prev = 0.0;
  for (double& v : x) {
    const double e = g(rng);
    v = e + 0.4 * prev;
    prev = e;
  }
  const ArimaModel m = fit(x, {0, 0, 1});
  EXPECT_NEAR(m.theta[0], 0.4, 0.05);
  EXPECT_NEAR(m.sigma2, 1.0, 0.05);
}

TEST(Fit, IntegratedModelForecastsInLevels) {
  // A random walk with drift: ARIMA(1,1,0) forecasts continue from the last level.
  auto w = simulate_ar({0.3}, 0.5, 3000, 12);
  std::vector<double> x(w.size() + 1, 100.0);
  for (std::size_t t = 0; t < w.size(); ++t) x[t + 1] = x[t] + w[t] + 0.01;
  const ArimaModel m = fit(x, {1, 1, 0});
  EXPECT_NEAR(m.phi[0], 0.3, 0.05);
  const auto f = forecast(m, 3);
  const double dw = x.back() - x[x.size() - 2];
  EXPECT_NEAR(f[0], x.back() + m.c + m.phi[0] * dw, 1e-12);
}

TEST(Fit, EstimatorIsConsistent) {
  const std::vector<double> phi{0.5, -0.3, 0.2};
  std::vector<double> err_small, err_large;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = fit(simulate_ar(phi, 1.0, 2000, seed), {3, 0, 0});
    const auto b = fit(simulate_ar(phi, 1.0, 4000, seed + 100), {3, 0, 0});
    double ea = 0.0, eb = 0.0;
    for (int k = 0; k < 3; ++k) {
      ea = std::max(ea, std::fabs(a.phi[k] - phi[k]));
      eb = std::max(eb, std::fabs(b.phi[k] - phi[k]));
    }
    err_small.push_back(ea);
    err_large.push_back(eb);
  }
  std::sort(err_small.begin(), err_small.end());
  std::sort(err_large.begin(), err_large.end());
  EXPECT_LE(err_large[5], err_small[5]);
}

TEST(Stationarity, StepDownCheck) {
  EXPECT_TRUE(is_stationary(std::vector<double>{0.5, -0.3, 0.2}));
  EXPECT_FALSE(is_stationary(std::vector<double>{1.0}));
  EXPECT_FALSE(is_stationary(std::vector<double>{0.6, 0.5}));
  EXPECT_TRUE(is_stationary(std::vector<double>{}));
}
