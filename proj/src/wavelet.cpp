#include "fxh/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxh {

namespace {

std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

std::size_t wrap(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t r = i % n;
  return static_cast<std::size_t>(r < 0 ? r + n : r);
}

// One analysis stage: a[o] = sum_j lo[j] x(2o+1-j), same for the highpass.
void analysis_stage(std::span<const double> x, const WaveletFilter& f, BoundaryMode mode,
                    std::vector<double>& approx, std::vector<double>& detail) {
  const auto L = static_cast<std::ptrdiff_t>(f.length());
  const std::size_t out = dwt_coeff_length(x.size(), f.length(), mode);
  approx.assign(out, 0.0);
  detail.assign(out, 0.0);

  if (mode == BoundaryMode::symmetric) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t o = 0; o < out; ++o) {
      const auto base = static_cast<std::ptrdiff_t>(2 * o + 1);
      double a = 0.0;
      double d = 0.0;
      for (std::ptrdiff_t j = 0; j < L; ++j) {
        const double v = x[reflect(base - j, n)];
        a += f.dec_lo[static_cast<std::size_t>(j)] * v;
        d += f.dec_hi[static_cast<std::size_t>(j)] * v;
      }
      approx[o] = a;
      detail[o] = d;
    }
    return;
  }

  // Periodization of an even-length extension (odd inputs repeat their last sample),
  // centred so that coefficient o sits over samples 2o and 2o+1.
  const auto n_ext = static_cast<std::ptrdiff_t>(2 * out);
  const std::ptrdiff_t shift = L / 2 - 1;
  auto sample = [&](std::size_t i) { return i < x.size() ? x[i] : x.back(); };
  for (std::size_t o = 0; o < out; ++o) {
    const auto base = static_cast<std::ptrdiff_t>(2 * o + 1) + shift;
    double a = 0.0;
    double d = 0.0;
    for (std::ptrdiff_t j = 0; j < L; ++j) {
      const double v = sample(wrap(base - j, n_ext));
      a += f.dec_lo[static_cast<std::size_t>(j)] * v;
      d += f.dec_hi[static_cast<std::size_t>(j)] * v;
    }
    approx[o] = a;
    detail[o] = d;
  }
}

// One synthesis stage producing `out_len` samples.
std::vector<double> synthesis_stage(std::span<const double> approx, std::span<const double> detail,
                                    const WaveletFilter& f, BoundaryMode mode, std::size_t out_len) {
  const auto L = static_cast<std::ptrdiff_t>(f.length());
  const auto N = static_cast<std::ptrdiff_t>(approx.size());

  if (mode == BoundaryMode::symmetric) {
    // x[m] = sum_o a[o] rec_lo[m+L-2-2o] + d[o] rec_hi[m+L-2-2o]
    std::vector<double> x(out_len, 0.0);
    for (std::size_t m = 0; m < out_len; ++m) {
      const auto mm = static_cast<std::ptrdiff_t>(m);
      const std::ptrdiff_t o_lo = std::max<std::ptrdiff_t>(0, mm / 2);
      const std::ptrdiff_t o_hi = std::min<std::ptrdiff_t>(N - 1, (mm + L - 2) / 2);
      double acc = 0.0;
      for (std::ptrdiff_t o = o_lo; o <= o_hi; ++o) {
        const std::ptrdiff_t k = mm + L - 2 - 2 * o;
        if (k < 0 || k >= L) continue;
        acc += approx[static_cast<std::size_t>(o)] * f.rec_lo[static_cast<std::size_t>(k)] +
               detail[static_cast<std::size_t>(o)] * f.rec_hi[static_cast<std::size_t>(k)];
      }
      x[m] = acc;
    }
    return x;
  }

  // Periodization synthesis is the transpose of the (orthogonal) analysis operator.
  const auto n_ext = 2 * N;
  const std::ptrdiff_t shift = L / 2 - 1;
  std::vector<double> x(static_cast<std::size_t>(n_ext), 0.0);
  for (std::ptrdiff_t o = 0; o < N; ++o) {
    const double a = approx[static_cast<std::size_t>(o)];
    const double d = detail[static_cast<std::size_t>(o)];
    for (std::ptrdiff_t j = 0; j < L; ++j) {
      x[wrap(2 * o + 1 + shift - j, n_ext)] +=
          a * f.dec_lo[static_cast<std::size_t>(j)] + d * f.dec_hi[static_cast<std::size_t>(j)];
    }
  }
  x.resize(out_len);
  return x;
}

}  // namespace

WaveletFilter WaveletFilter::from_lowpass(std::string name, std::vector<double> dec_lo) {
  WaveletFilter f;
  f.name = std::move(name);
  const std::size_t L = dec_lo.size();
  f.dec_hi.resize(L);
  f.rec_lo.resize(L);
  f.rec_hi.resize(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double sign = (k % 2 == 0) ? -1.0 : 1.0;
    f.dec_hi[k] = sign * dec_lo[L - 1 - k];
  }
  for (std::size_t k = 0; k < L; ++k) {
    f.rec_lo[k] = dec_lo[L - 1 - k];
    f.rec_hi[k] = f.dec_hi[L - 1 - k];
  }
  f.dec_lo = std::move(dec_lo);
  return f;
}

std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::symmetric ? "symmetric" : "periodization";
}

BoundaryMode boundary_mode_from_string(std::string_view s) {
  if (s == "symmetric") return BoundaryMode::symmetric;
  if (s == "periodization" || s == "periodic") return BoundaryMode::periodization;
  throw std::invalid_argument("unknown boundary mode '" + std::string(s) + "'");
}

std::size_t dwt_coeff_length(std::size_t n, std::size_t filter_length, BoundaryMode mode) {
  if (mode == BoundaryMode::symmetric) return (n + filter_length - 1) / 2;
  return (n + 1) / 2;
}

CoeffPyramid dwt_multilevel(std::span<const double> signal, const WaveletFilter& filter, int level,
                            BoundaryMode mode) {
  if (level < 1) throw std::invalid_argument("dwt_multilevel: level must be >= 1");
  if (filter.length() < 2 || filter.length() % 2 != 0)
    throw std::invalid_argument("dwt_multilevel: filter '" + filter.name + "' has invalid length");

  CoeffPyramid p;
  p.level = level;
  p.original_length = signal.size();
  p.mode = mode;
  p.filter_name = filter.name;
  p.details.resize(static_cast<std::size_t>(level));

  std::vector<double> current(signal.begin(), signal.end());
  std::vector<double> approx;
  std::vector<double> detail;
  for (int k = 0; k < level; ++k) {
    if (current.size() < filter.length()) {
      throw std::invalid_argument("dwt_multilevel: level " + std::to_string(level) +
                                  " too deep for a signal of length " +
                                  std::to_string(signal.size()) + " with " + filter.name);
    }
    p.level_lengths.push_back(current.size());
    analysis_stage(current, filter, mode, approx, detail);
    p.details[static_cast<std::size_t>(level - 1 - k)] = std::move(detail);
    current = std::move(approx);
  }
  p.approx = std::move(current);
  return p;
}

std::vector<double> idwt_multilevel(const CoeffPyramid& p, const WaveletFilter& filter) {
  if (!p.filter_name.empty() && p.filter_name != filter.name)
    throw std::invalid_argument("idwt_multilevel: pyramid built with '" + p.filter_name +
                                "' but reconstructing with '" + filter.name + "'");
  if (p.level < 1 || p.details.size() != static_cast<std::size_t>(p.level) ||
      p.level_lengths.size() != p.details.size())
    throw std::invalid_argument("idwt_multilevel: inconsistent pyramid metadata");

  std::vector<double> current = p.approx;
  for (int k = p.level - 1; k >= 0; --k) {
    const auto& detail = p.details[static_cast<std::size_t>(p.level - 1 - k)];
    const std::size_t out_len = p.level_lengths[static_cast<std::size_t>(k)];
    if (current.size() != detail.size() ||
        detail.size() != dwt_coeff_length(out_len, filter.length(), p.mode))
      throw std::invalid_argument("idwt_multilevel: coefficient lengths do not match filter " +
                                  filter.name);
    current = synthesis_stage(current, detail, filter, p.mode, out_len);
  }
  return current;
}

double estimate_sigma(const CoeffPyramid& p) {
  if (p.details.empty() || p.finest_detail().empty())
    throw std::invalid_argument("estimate_sigma: empty detail band");
  std::vector<double> mag(p.finest_detail().size());
  std::transform(p.finest_detail().begin(), p.finest_detail().end(), mag.begin(),
                 [](double v) { return std::abs(v); });
  const std::size_t n = mag.size();
  const std::size_t mid = n / 2;
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(mid), mag.end());
  double median = mag[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

double universal_threshold(double sigma, std::size_t n) {
  if (n < 2) throw std::invalid_argument("universal_threshold: n must be >= 2");
  if (!(sigma >= 0.0)) throw std::invalid_argument("universal_threshold: sigma must be >= 0");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

std::vector<double> hard_threshold(std::span<const double> coeffs, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("hard_threshold: lambda must be >= 0");
  std::vector<double> out(coeffs.size());
  std::transform(coeffs.begin(), coeffs.end(), out.begin(),
                 [lambda](double c) { return std::abs(c) > lambda ? c : 0.0; });
  return out;
}

ThresholdRule fit_threshold(std::span<const double> signal, const DenoiseOptions& options) {
  const WaveletFilter& f = wavelet_filter(options.wavelet);
  const CoeffPyramid p = dwt_multilevel(signal, f, options.level, options.mode);
  ThresholdRule rule;
  rule.sigma_estimate = estimate_sigma(p);
  rule.lambda = universal_threshold(rule.sigma_estimate, signal.size());
  return rule;
}

std::vector<double> denoise_with(std::span<const double> signal, const ThresholdRule& rule,
                                 const DenoiseOptions& options) {
  const WaveletFilter& f = wavelet_filter(options.wavelet);
  CoeffPyramid p = dwt_multilevel(signal, f, options.level, options.mode);
  for (auto& band : p.details) band = hard_threshold(band, rule.lambda);
  return idwt_multilevel(p, f);
}

std::vector<double> denoise(std::span<const double> signal, const WaveletFilter& filter, int level,
                            BoundaryMode mode) {
  CoeffPyramid p = dwt_multilevel(signal, filter, level, mode);
  const double lambda = universal_threshold(estimate_sigma(p), signal.size());
  for (auto& band : p.details) band = hard_threshold(band, lambda);
  return idwt_multilevel(p, filter);
}

}  // namespace fxh
