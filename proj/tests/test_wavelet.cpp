#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "data/wavelet_reference.hpp"
#include "fxh/wavelet.hpp"

using namespace fxh;
namespace ref = wavelet_reference;

namespace {

std::vector<double> test_signal(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    x[i] = std::sin(0.3 * t) + 0.05 * static_cast<double>((i * 7) % 11) - 0.2 * std::cos(0.05 * t * t);
  }
  return x;
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double tol,
                  const std::string& what) {
  ASSERT_EQ(got.size(), want.size()) << what;
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << what << " [" << i << "]";
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

bool fits_level(std::size_t n, std::size_t L, int level, BoundaryMode mode) {
  for (int k = 0; k < level; ++k) {
    if (n < L) return false;
    n = dwt_coeff_length(n, L, mode);
  }
  return true;
}

}  // namespace

TEST(Filters, MatchPublishedTaps) {
  const std::pair<const char*, const std::vector<double>*> taps[] = {
      {"haar", &ref::haar_dec_lo}, {"db2", &ref::db2_dec_lo},   {"db4", &ref::db4_dec_lo},
      {"sym4", &ref::sym4_dec_lo}, {"sym8", &ref::sym8_dec_lo}, {"sym15", &ref::sym15_dec_lo}};
  for (const auto& [name, want] : taps) expect_close(wavelet_filter(name).dec_lo, *want, 1e-15, name);
}

TEST(Filters, LowpassSumAndQuadratureMirror) {
  for (const auto& name : registered_wavelets()) {
    const WaveletFilter& f = wavelet_filter(name);
    const std::size_t L = f.length();
    EXPECT_NEAR(std::accumulate(f.dec_lo.begin(), f.dec_lo.end(), 0.0), std::sqrt(2.0), 1e-10) << name;
    for (std::size_t k = 0; k < L; ++k) {
      const double sign = (k % 2 == 0) ? -1.0 : 1.0;
      EXPECT_DOUBLE_EQ(f.dec_hi[k], sign * f.dec_lo[L - 1 - k]) << name;
      EXPECT_DOUBLE_EQ(f.rec_lo[k], f.dec_lo[L - 1 - k]) << name;
      EXPECT_DOUBLE_EQ(f.rec_hi[k], f.dec_hi[L - 1 - k]) << name;
    }
    // Orthonormality: unit norm and orthogonal to even shifts.
    for (std::size_t s = 0; s < L; s += 2) {
      double dot = 0.0;
      for (std::size_t k = s; k < L; ++k) dot += f.dec_lo[k] * f.dec_lo[k - s];
      EXPECT_NEAR(dot, s == 0 ? 1.0 : 0.0, 1e-12) << name << " shift " << s;
    }
  }
  EXPECT_EQ(wavelet_filter("sym15").length(), 30u);
  EXPECT_THROW(wavelet_filter("coif3"), std::invalid_argument);
}

TEST(Dwt, MatchesReferenceCoefficients) {
  struct Case {
    const char* filter;
    std::size_t n;
    int level;
    BoundaryMode mode;
    std::vector<const std::vector<double>*> coeffs;
  };
  const Case cases[] = {
      {"db4", 100, 2, BoundaryMode::symmetric, {&ref::db4_sym_n100_l2_c0, &ref::db4_sym_n100_l2_c1, &ref::db4_sym_n100_l2_c2}},
      {"sym15", 128, 2, BoundaryMode::symmetric,
       {&ref::sym15_sym_n128_l2_c0, &ref::sym15_sym_n128_l2_c1, &ref::sym15_sym_n128_l2_c2}},
      {"sym4", 57, 3, BoundaryMode::symmetric,
       {&ref::sym4_sym_n57_l3_c0, &ref::sym4_sym_n57_l3_c1, &ref::sym4_sym_n57_l3_c2, &ref::sym4_sym_n57_l3_c3}},
      {"haar", 37, 3, BoundaryMode::periodization,
       {&ref::haar_per_n37_l3_c0, &ref::haar_per_n37_l3_c1, &ref::haar_per_n37_l3_c2, &ref::haar_per_n37_l3_c3}},
      {"db2", 64, 2, BoundaryMode::periodization, {&ref::db2_per_n64_l2_c0, &ref::db2_per_n64_l2_c1, &ref::db2_per_n64_l2_c2}},
  };
  for (const auto& c : cases) {
    const auto x = test_signal(c.n);
    const CoeffPyramid p = dwt_multilevel(x, wavelet_filter(c.filter), c.level, c.mode);
    const std::string tag = std::string(c.filter) + "/" + to_string(c.mode);
    expect_close(p.approx, *c.coeffs[0], 1e-12, tag + " approx");
    ASSERT_EQ(p.details.size(), static_cast<std::size_t>(c.level));
    for (int k = 0; k < c.level; ++k) expect_close(p.details[k], *c.coeffs[k + 1], 1e-12, tag + " detail");
    expect_close(idwt_multilevel(p, wavelet_filter(c.filter)), x, 1e-10, tag + " round trip");
  }
}

TEST(Dwt, CoefficientLengths) {
  EXPECT_EQ(dwt_coeff_length(1024, 30, BoundaryMode::symmetric), (1024u + 29) / 2);
  EXPECT_EQ(dwt_coeff_length(257, 8, BoundaryMode::symmetric), (257u + 7) / 2);
  EXPECT_EQ(dwt_coeff_length(257, 8, BoundaryMode::periodization), 129u);
  const CoeffPyramid p = dwt_multilevel(test_signal(257), wavelet_filter("db4"), 3);
  ASSERT_EQ(p.level_lengths.size(), 3u);
  EXPECT_EQ(p.level_lengths[0], 257u);
  EXPECT_EQ(p.details.back().size(), dwt_coeff_length(257, 8, BoundaryMode::symmetric));
}

TEST(Dwt, HaarHandValues) {
  const CoeffPyramid p = dwt_multilevel(std::vector<double>{1.0, 1.0}, wavelet_filter("haar"), 1);
  ASSERT_EQ(p.approx.size(), 1u);
  EXPECT_NEAR(p.approx[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(p.details[0][0], 0.0, 1e-15);

  CoeffPyramid q = dwt_multilevel(std::vector<double>{1.0, 3.0}, wavelet_filter("haar"), 1);
  q.details[0].assign(q.details[0].size(), 0.0);
  const auto smooth = idwt_multilevel(q, wavelet_filter("haar"));
  EXPECT_NEAR(smooth[0], 2.0, 1e-14);
  EXPECT_NEAR(smooth[1], 2.0, 1e-14);

  const CoeffPyramid c = dwt_multilevel(std::vector<double>(16, 4.2), wavelet_filter("haar"), 1);
  for (double d : c.details[0]) EXPECT_NEAR(d, 0.0, 1e-14);
}

TEST(Dwt, ZeroPyramidReconstructsZero) {
  CoeffPyramid p = dwt_multilevel(test_signal(64), wavelet_filter("db4"), 2);
  p.approx.assign(p.approx.size(), 0.0);
  for (auto& d : p.details) d.assign(d.size(), 0.0);
  for (double v : idwt_multilevel(p, wavelet_filter("db4"))) EXPECT_EQ(v, 0.0);
}

TEST(Dwt, PerfectReconstructionSweep) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (const char* name : {"haar", "db4", "sym15"}) {
    for (std::size_t n : {64u, 257u, 1024u}) {
      for (int level = 1; level <= 4; ++level) {
        std::vector<double> x(n);
        for (double& v : x) v = g(rng);
        const auto& f = wavelet_filter(name);
        for (BoundaryMode mode : {BoundaryMode::symmetric, BoundaryMode::periodization}) {
          if (!fits_level(n, f.length(), level, mode)) continue;
          const auto back = idwt_multilevel(dwt_multilevel(x, f, level, mode), f);
          EXPECT_LT(max_abs_diff(back, x), 1e-10) << name << " n=" << n << " level=" << level;
        }
      }
    }
  }
}

TEST(Dwt, PeriodizationConservesEnergy) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<double> x(512);
  for (double& v : x) v = g(rng);
  const CoeffPyramid p = dwt_multilevel(x, wavelet_filter("sym8"), 4, BoundaryMode::periodization);
  auto sq = [](const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); };
  double e = sq(p.approx);
  for (const auto& d : p.details) e += sq(d);
  EXPECT_NEAR(e, sq(x), 1e-8);
}

TEST(Dwt, RejectsInvalidRequests) {
  EXPECT_THROW(dwt_multilevel(test_signal(20), wavelet_filter("sym15"), 1), std::invalid_argument);
  EXPECT_THROW(dwt_multilevel(test_signal(64), wavelet_filter("db4"), 0), std::invalid_argument);
  EXPECT_THROW(dwt_multilevel(test_signal(64), wavelet_filter("sym15"), 10), std::invalid_argument);
  const CoeffPyramid p = dwt_multilevel(test_signal(64), wavelet_filter("db4"), 2);
  EXPECT_THROW(idwt_multilevel(p, wavelet_filter("sym4")), std::invalid_argument);
}

TEST(Threshold, SigmaAndUniversalRule) {
  CoeffPyramid p;
  p.details = {{-0.6745, 0.6745, 0.6745}};
  EXPECT_NEAR(estimate_sigma(p), 1.0, 1e-15);
  p.details = {{0.0, 0.0}};
  EXPECT_EQ(estimate_sigma(p), 0.0);
  p.details = {{}};
  EXPECT_THROW(estimate_sigma(p), std::invalid_argument);

  EXPECT_EQ(universal_threshold(0.0, 1024), 0.0);
  EXPECT_NEAR(universal_threshold(1.0, 1024), std::sqrt(2.0 * std::log(1024.0)), 1e-15);
  EXPECT_NEAR(universal_threshold(1.0, 1024), 3.7233, 1e-4);
  EXPECT_DOUBLE_EQ(universal_threshold(2.0, 300), 2.0 * universal_threshold(1.0, 300));
  EXPECT_THROW(universal_threshold(1.0, 1), std::invalid_argument);
}

TEST(Threshold, SigmaOfGaussianNoise) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  std::vector<double> x(4096);
  for (double& v : x) v = g(rng);
  const double s = estimate_sigma(dwt_multilevel(x, wavelet_filter("haar"), 1));
  EXPECT_GT(s, 0.9);
  EXPECT_LT(s, 1.1);
}

TEST(Threshold, HardRule) {
  EXPECT_EQ(hard_threshold(std::vector<double>{0.5, -2.0, 1.2}, 1.0), (std::vector<double>{0.0, -2.0, 1.2}));
  EXPECT_EQ(hard_threshold(std::vector<double>{0.5, -2.0, 1.2}, 0.0), (std::vector<double>{0.5, -2.0, 1.2}));
  EXPECT_EQ(hard_threshold(std::vector<double>{0.5, -1.0}, 1.0), (std::vector<double>{0.0, 0.0}));
  const std::vector<double> v{0.3, -1.7, 2.2, -0.1, 1.0001};
  const auto once = hard_threshold(v, 1.0);
  EXPECT_EQ(hard_threshold(once, 1.0), once);
}

TEST(Denoise, MatchesReference) {
  const auto& f = wavelet_filter("sym15");
  const CoeffPyramid p = dwt_multilevel(ref::denoise_input, f, 4);
  EXPECT_NEAR(estimate_sigma(p), ref::denoise_sigma, 1e-13);
  expect_close(denoise(ref::denoise_input, f, 4), ref::denoise_output, 1e-11, "denoise");

  const ThresholdRule rule = fit_threshold(ref::denoise_input);
  EXPECT_NEAR(rule.lambda, ref::denoise_lambda, 1e-13);
  expect_close(denoise_with(ref::denoise_input, rule), ref::denoise_output, 1e-11, "denoise_with");
}

TEST(Denoise, ConstantAndNoiselessInputsUnchanged) {
  const auto& f = wavelet_filter("sym15");
  const std::vector<double> c(300, 110.25);
  EXPECT_LT(max_abs_diff(denoise(c, f, 4), c), 1e-8);
  // A ramp has vanishing finest-band details away from the edges, so lambda is ~0.
  std::vector<double> r(256);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.01 * static_cast<double>(i);
  const CoeffPyramid p = dwt_multilevel(r, f, 4);
  ASSERT_LT(estimate_sigma(p), 1e-12);
  EXPECT_LT(max_abs_diff(denoise(r, f, 4), r), 1e-8);
}

TEST(Denoise, ScaleEquivariant) {
  const auto& f = wavelet_filter("sym15");
  const auto a = denoise(ref::denoise_input, f, 4);
  std::vector<double> scaled = ref::denoise_input;
  for (double& v : scaled) v *= 4.0;
  const auto b = denoise(scaled, f, 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 4.0 * a[i], 1e-11);
}

TEST(Denoise, ReducesNoiseOnSine) {
  const auto& f = wavelet_filter("sym15");
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<double> clean(1024), noisy(1024);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    clean[i] = std::sin(2.0 * M_PI * static_cast<double>(i) / 128.0);
    noisy[i] = clean[i] + g(rng);
  }
  const auto den = denoise(noisy, f, 4);
  auto rmse = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - clean[i]) * (v[i] - clean[i]);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  EXPECT_LE(rmse(den), 0.5 * rmse(noisy));
  EXPECT_EQ(den.size(), noisy.size());
}
