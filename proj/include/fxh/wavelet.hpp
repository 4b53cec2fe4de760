#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxh {

/// Orthonormal two-channel filter bank.
///
/// Conventions follow the usual DWT libraries: dec_hi[k] = (-1)^(k+1) dec_lo[L-1-k],
/// rec_lo[k] = dec_lo[L-1-k], rec_hi[k] = dec_hi[L-1-k]. The lowpass taps sum to sqrt(2).
struct WaveletFilter {
  std::string name;
  std::vector<double> dec_lo;
  std::vector<double> dec_hi;
  std::vector<double> rec_lo;
  std::vector<double> rec_hi;

  std::size_t length() const { return dec_lo.size(); }

  /// Builds the four filters from the decomposition lowpass taps.
  static WaveletFilter from_lowpass(std::string name, std::vector<double> dec_lo);
};

/// Registered filters: haar, db2, db4, sym4, sym8, sym15. Throws std::invalid_argument
/// for unknown names.
const WaveletFilter& wavelet_filter(std::string_view name);
std::vector<std::string> registered_wavelets();

enum class BoundaryMode {
  symmetric,      ///< half-point symmetric extension, floor((n+L-1)/2) coefficients
  periodization,  ///< periodic extension, ceil(n/2) coefficients, orthogonal for even n
};

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(std::string_view s);

struct CoeffPyramid {
  std::vector<double> approx;                ///< deepest approximation band
  std::vector<std::vector<double>> details;  ///< deepest level first
  int level = 0;
  std::size_t original_length = 0;
  BoundaryMode mode = BoundaryMode::symmetric;
  std::string filter_name;
  /// Input length at each decomposition stage, finest first; level_lengths[0] == original_length.
  std::vector<std::size_t> level_lengths;

  const std::vector<double>& finest_detail() const { return details.back(); }
};

/// Coefficient count of one analysis stage.
std::size_t dwt_coeff_length(std::size_t n, std::size_t filter_length, BoundaryMode mode);

/// Multilevel analysis. Every stage's input must be at least as long as the filter.
CoeffPyramid dwt_multilevel(std::span<const double> signal, const WaveletFilter& filter, int level,
                            BoundaryMode mode = BoundaryMode::symmetric);

/// Multilevel synthesis back to original_length samples.
std::vector<double> idwt_multilevel(const CoeffPyramid& pyramid, const WaveletFilter& filter);

/// MAD noise estimate on the finest detail band: median(|d|) / 0.6745.
double estimate_sigma(const CoeffPyramid& pyramid);

/// VisuShrink threshold sigma * sqrt(2 ln n).
double universal_threshold(double sigma, std::size_t n);

/// Keeps coefficients with |c| > lambda, zeroes the rest.
std::vector<double> hard_threshold(std::span<const double> coeffs, double lambda);

struct ThresholdRule {
  enum class Kind { hard };
  Kind kind = Kind::hard;
  double lambda = 0.0;
  double sigma_estimate = 0.0;
};

struct DenoiseOptions {
  std::string wavelet = "sym15";
  int level = 4;
  BoundaryMode mode = BoundaryMode::symmetric;
};

/// Universal hard threshold estimated from `signal` (typically a training segment).
ThresholdRule fit_threshold(std::span<const double> signal, const DenoiseOptions& options = {});

/// Decompose, hard-threshold every detail band with `rule.lambda`, reconstruct.
std::vector<double> denoise_with(std::span<const double> signal, const ThresholdRule& rule,
                                 const DenoiseOptions& options = {});

/// Self-fitted denoising: sigma from this signal's finest band, universal threshold,
/// every detail band thresholded.
std::vector<double> denoise(std::span<const double> signal, const WaveletFilter& filter,
                            int level = 4, BoundaryMode mode = BoundaryMode::symmetric);

}  // namespace fxh
