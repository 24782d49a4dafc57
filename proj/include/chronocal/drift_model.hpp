#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chronocal/gaussian_fit.hpp"
#include "chronocal/geometry.hpp"

namespace chronocal {

/// Second-order drift polynomial of one pixel: peak position (ps) as a
/// function of TDC code. Lower degrees leave the upper coefficients at 0.
struct DriftModel {
  PixelId pixel;
  std::array<double, 3> coeffs{};  // a0 [ps], a1 [ps/code], a2 [ps/code^2]
  int degree = 2;
  /// Highest code covered by an accepted group.
  std::uint32_t valid_code_max = 0;
  int n_groups_used = 0;
  /// Coincidences in the accepted groups; the reference weight.
  std::uint64_t total_counts = 0;

  double operator()(double code) const noexcept {
    return coeffs[0] + code * (coeffs[1] + code * coeffs[2]);
  }
};

struct DriftFitOptions {
  std::uint32_t group_size = 16;
  std::uint64_t min_counts = kDefaultMinCounts;
  int degree = 2;
};

/// Representative code of a group: its center, group * size + (size - 1) / 2.
double group_center(std::uint32_t group, std::uint32_t group_size);

/// Weighted least-squares polynomial of peak mean against group center,
/// weights = group counts. Groups that did not converge or hold fewer than
/// min_counts are dropped. fits[g] is the fit of group g. Throws
/// InsufficientGroups when fewer than degree + 1 groups survive, ConfigError
/// for a degree outside [0, 2].
DriftModel estimate_drift(PixelId pixel, std::span<const GaussianFit> fits,
                          const DriftFitOptions& options, std::uint32_t n_codes);

/// Weighted polynomial least squares via Householder QR of the
/// sqrt-weighted Vandermonde matrix. Exposed for testing.
std::array<double, 3> weighted_polyfit(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> w, int degree);

/// How the global reference peak position is chosen.
struct ReferencePolicy {
  enum class Kind { weighted_mean, median, fixed };
  Kind kind = Kind::weighted_mean;
  double fixed_ps = 0.0;
  /// Code at which each pixel's polynomial is evaluated.
  std::uint32_t anchor_code = 0;

  /// "weighted-mean", "median" or "fixed:<ps>"; ConfigError otherwise.
  static ReferencePolicy parse(std::string_view text);
  std::string to_string() const;
};

/// weighted_mean: count-weighted mean of model(anchor) over the models;
/// median: median of model(anchor); fixed: the given value. Throws
/// CalibrationError when models is empty.
double choose_reference(std::span<const DriftModel> models, const ReferencePolicy& policy);

}  // namespace chronocal
