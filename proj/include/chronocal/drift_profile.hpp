#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chronocal/geometry.hpp"

namespace chronocal {

/// Spatial pattern used to expand scalar drift magnitudes into per-pixel
/// tables. The shapes are phenomenological stand-ins:
///  - uniform:       identical alpha/beta/skew everywhere
///  - center_peaked: alpha and beta largest at the array center (supply drop),
///                   falling quadratically with distance; flat skew
///  - row_gradient:  flat alpha/beta; skew grows along each row and down the
///                   columns (single main buffer feeding row drivers)
///  - tree:          flat alpha/beta; skew grows along each row only (rows fed
///                   by an equalized buffer tree)
enum class DriftProfile { uniform, center_peaked, row_gradient, tree };

std::string_view to_string(DriftProfile profile);
/// Throws ConfigError on an unknown name.
DriftProfile parse_drift_profile(std::string_view name);

struct DriftMagnitudes {
  DriftProfile profile = DriftProfile::uniform;
  /// Relative oscillator period error at the profile extremum.
  double alpha = 0.0;
  /// Relative period change per code at the profile extremum.
  double beta = 0.0;
  /// Skew magnitude in ps (the maximum for gradient profiles).
  double skew_ps = 0.0;
  /// center_peaked: value at the array corner relative to the center.
  double edge_ratio = 0.25;
  /// Relative std of random ring-to-ring mismatch applied to alpha and beta.
  double mismatch = 0.0;
  /// Std of a random static per-pixel offset in ps.
  double skew_spread_ps = 0.0;
  /// Scales alpha by (1 + gain * active fraction) per observation window.
  /// Zero keeps the ground truth closed-form.
  double activity_gain = 0.0;
};

/// Per-pixel drift tables, row-major over the array.
struct DriftConfig {
  DriftProfile profile = DriftProfile::uniform;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> skew_ps;
  double activity_gain = 0.0;

  static DriftConfig zero(const DetectorGeometry& geometry);
  static DriftConfig from_profile(const DetectorGeometry& geometry, const DriftMagnitudes& m,
                                  std::uint64_t seed);

  /// Table sizes must match the geometry and every per-code period must stay
  /// positive; throws ConfigError otherwise.
  void validate(const DetectorGeometry& geometry) const;
};

/// Cumulative timing error of a pixel at a code when the oscillator period
/// of code k is bin_ps * (1 + alpha + beta * k):
///   bin_ps * (alpha * c + beta * c * (c - 1) / 2) + skew.
/// Throws RangeError if code >= n_codes.
double drift_ground_truth(const DetectorGeometry& geometry, const DriftConfig& drift,
                          PixelId pixel, std::uint32_t code);

}  // namespace chronocal
