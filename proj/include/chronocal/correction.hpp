#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chronocal/events.hpp"
#include "chronocal/histogram.hpp"
#include "chronocal/lut.hpp"

namespace chronocal {

/// corrected time = time + offset(pixel, code), re-sorted by corrected time.
/// Pixel and code are kept. A correction that would go below t = 0 clamps to
/// 0 so no event is dropped. Throws GeometryError before touching any event
/// when the stream's geometry differs from the LUT's or an event lies outside
/// it.
std::vector<ImagerEvent> apply_lut(std::span<const ImagerEvent> events,
                                   const DetectorGeometry& events_geometry,
                                   const CorrectionLut& lut);

namespace serial {
std::vector<ImagerEvent> apply_lut(std::span<const ImagerEvent> events,
                                   const DetectorGeometry& events_geometry,
                                   const CorrectionLut& lut);
}  // namespace serial

struct PeakOptions {
  /// "Full width" is measured at this fraction of (peak - baseline).
  double full_width_fraction = 0.05;
};

struct PeakMetrics {
  double fwhm_ps = 0.0;
  double full_width_ps = 0.0;
  /// Center of the highest section.
  double peak_ps = 0.0;
  double baseline = 0.0;
  std::uint64_t total_counts = 0;
};

/// Baseline = median of the outer quarter of sections (an eighth at each
/// end). Widths come from linear interpolation between section centers where
/// the counts cross baseline + level * (peak - baseline), walking outward from
/// the highest section. Throws NoPeak when no section exceeds
/// baseline + 5 sqrt(baseline).
PeakMetrics peak_metrics(const CoincidenceHistogram& hist, const PeakOptions& options = {});

}  // namespace chronocal
