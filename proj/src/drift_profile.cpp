#include "chronocal/drift_profile.hpp"

#include <cmath>
#include <random>
#include <string>

#include "chronocal/errors.hpp"
#include "chronocal/rng.hpp"

namespace chronocal {

std::string_view to_string(DriftProfile profile) {
  switch (profile) {
    case DriftProfile::uniform: return "uniform";
    case DriftProfile::center_peaked: return "center_peaked";
    case DriftProfile::row_gradient: return "row_gradient";
    case DriftProfile::tree: return "tree";
  }
  return "uniform";
}

DriftProfile parse_drift_profile(std::string_view name) {
  if (name == "uniform") return DriftProfile::uniform;
  if (name == "center_peaked") return DriftProfile::center_peaked;
  if (name == "row_gradient") return DriftProfile::row_gradient;
  if (name == "tree") return DriftProfile::tree;
  throw ConfigError("unknown drift profile '" + std::string(name) + "'");
}

DriftConfig DriftConfig::zero(const DetectorGeometry& geometry) {
  DriftConfig d;
  const auto n = geometry.pixel_count();
  d.alpha.assign(n, 0.0);
  d.beta.assign(n, 0.0);
  d.skew_ps.assign(n, 0.0);
  return d;
}

DriftConfig DriftConfig::from_profile(const DetectorGeometry& geometry, const DriftMagnitudes& m,
                                      std::uint64_t seed) {
  geometry.validate();
  DriftConfig d = zero(geometry);
  d.profile = m.profile;
  d.activity_gain = m.activity_gain;

  const double cr = (geometry.rows - 1) / 2.0;
  const double cc = (geometry.cols - 1) / 2.0;
  const double corner = std::hypot(cr, cc);
  const double row_span = geometry.rows > 1 ? geometry.rows - 1.0 : 1.0;
  const double col_span = geometry.cols > 1 ? geometry.cols - 1.0 : 1.0;

  for (std::uint32_t r = 0; r < geometry.rows; ++r) {
    for (std::uint32_t c = 0; c < geometry.cols; ++c) {
      const auto i = geometry.linear({r, c});
      double supply = 1.0;
      double skew = m.skew_ps;
      switch (m.profile) {
        case DriftProfile::uniform:
          break;
        case DriftProfile::center_peaked: {
          const double rel = corner > 0 ? std::hypot(r - cr, c - cc) / corner : 0.0;
          supply = 1.0 - (1.0 - m.edge_ratio) * rel * rel;
          break;
        }
        case DriftProfile::row_gradient:
          skew = m.skew_ps * 0.5 * (c / col_span + r / row_span);
          break;
        case DriftProfile::tree:
          skew = m.skew_ps * (c / col_span);
          break;
      }
      d.alpha[i] = m.alpha * supply;
      d.beta[i] = m.beta * supply;
      d.skew_ps[i] = skew;
    }
  }

  if (m.mismatch > 0.0 || m.skew_spread_ps > 0.0) {
    auto rng = substream(seed, Stream::drift_mismatch);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < d.alpha.size(); ++i) {
      const double ga = unit(rng);
      const double gb = unit(rng);
      const double gs = unit(rng);
      d.alpha[i] *= 1.0 + m.mismatch * ga;
      d.beta[i] *= 1.0 + m.mismatch * gb;
      d.skew_ps[i] += m.skew_spread_ps * gs;
    }
  }
  d.validate(geometry);
  return d;
}

void DriftConfig::validate(const DetectorGeometry& geometry) const {
  const auto n = geometry.pixel_count();
  if (alpha.size() != n || beta.size() != n || skew_ps.size() != n) {
    throw ConfigError("drift tables do not match the " + std::to_string(geometry.rows) + "x" +
                      std::to_string(geometry.cols) + " geometry");
  }
  const double last = geometry.n_codes - 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    // period is linear in k, so checking both ends covers every code
    if (1.0 + alpha[i] <= 0.0 || 1.0 + alpha[i] + beta[i] * last <= 0.0) {
      throw ConfigError("drift: non-positive oscillator period for pixel " + std::to_string(i));
    }
  }
}

double drift_ground_truth(const DetectorGeometry& geometry, const DriftConfig& drift,
                          PixelId pixel, std::uint32_t code) {
  if (code >= geometry.n_codes) {
    throw RangeError("drift_ground_truth: code " + std::to_string(code) + " >= n_codes", code);
  }
  if (!geometry.contains(pixel)) throw RangeError("drift_ground_truth: pixel outside geometry");
  const auto i = geometry.linear(pixel);
  const double c = code;
  return geometry.bin_ps * (drift.alpha[i] * c + drift.beta[i] * c * (c - 1.0) / 2.0) +
         drift.skew_ps[i];
}

}  // namespace chronocal
