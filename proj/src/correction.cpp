#include "chronocal/correction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {
namespace {

void check_geometry(std::span<const ImagerEvent> events, const DetectorGeometry& g,
                    const CorrectionLut& lut) {
  if (!(g == lut.geometry)) {
    throw GeometryError("apply_lut: event geometry " + std::to_string(g.rows) + "x" +
                        std::to_string(g.cols) + "/" + std::to_string(g.n_codes) +
                        " does not match LUT geometry " + std::to_string(lut.geometry.rows) +
                        "x" + std::to_string(lut.geometry.cols) + "/" +
                        std::to_string(lut.geometry.n_codes));
  }
  if (lut.offsets.size() != g.pixel_count() * g.n_codes) {
    throw GeometryError("apply_lut: LUT table size does not match its geometry");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!g.contains(events[i].pixel) || events[i].tdc_code >= g.n_codes) {
      throw GeometryError("apply_lut: event " + std::to_string(i) + " outside LUT geometry");
    }
  }
}

ImagerEvent corrected(const ImagerEvent& e, const CorrectionLut& lut) {
  const auto t = static_cast<std::int64_t>(e.time_ps) + lut.offset(e.pixel, e.tdc_code);
  return {static_cast<std::uint64_t>(std::max<std::int64_t>(t, 0)), e.pixel, e.tdc_code};
}

}  // namespace

namespace serial {

std::vector<ImagerEvent> apply_lut(std::span<const ImagerEvent> events,
                                   const DetectorGeometry& events_geometry,
                                   const CorrectionLut& lut) {
  check_geometry(events, events_geometry, lut);
  std::vector<ImagerEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(corrected(e, lut));
  std::sort(out.begin(), out.end(),
            [](const ImagerEvent& a, const ImagerEvent& b) { return event_less(a, b); });
  return out;
}

}  // namespace serial

std::vector<ImagerEvent> apply_lut(std::span<const ImagerEvent> events,
                                   const DetectorGeometry& events_geometry,
                                   const CorrectionLut& lut) {
  check_geometry(events, events_geometry, lut);
  std::vector<ImagerEvent> out(events.size());
  const auto n = static_cast<std::int64_t>(events.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = corrected(events[static_cast<std::size_t>(i)], lut);
  }
  std::sort(out.begin(), out.end(),
            [](const ImagerEvent& a, const ImagerEvent& b) { return event_less(a, b); });
  return out;
}

PeakMetrics peak_metrics(const CoincidenceHistogram& hist, const PeakOptions& options) {
  const std::size_t n = hist.counts.size();
  if (n == 0) throw NoPeak("peak_metrics: empty histogram");
  std::vector<double> y(hist.counts.begin(), hist.counts.end());

  PeakMetrics m;
  for (auto c : hist.counts) m.total_counts += c;

  const std::size_t edge = std::max<std::size_t>(1, n / 8);
  std::vector<double> outer;
  for (std::size_t i = 0; i < std::min(edge, n); ++i) outer.push_back(y[i]);
  for (std::size_t i = n > edge ? n - edge : 0; i < n; ++i) outer.push_back(y[i]);
  std::sort(outer.begin(), outer.end());
  const auto mid = outer.size() / 2;
  m.baseline = outer.size() % 2 ? outer[mid] : 0.5 * (outer[mid - 1] + outer[mid]);

  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (y[peak] <= m.baseline + 5.0 * std::sqrt(m.baseline)) {
    throw NoPeak("peak_metrics: no section rises above baseline + 5 sqrt(baseline)");
  }
  m.peak_ps = hist.section_center(peak);

  const auto width_at = [&](double fraction) {
    const double level = m.baseline + fraction * (y[peak] - m.baseline);
    double right = hist.section_center(n - 1);
    for (std::size_t i = peak + 1; i < n; ++i) {
      if (y[i] < level) {
        const double frac = (y[i - 1] - level) / (y[i - 1] - y[i]);
        right = hist.section_center(i - 1) + frac * static_cast<double>(hist.section_ps);
        break;
      }
    }
    double left = hist.section_center(0);
    for (std::size_t i = peak; i-- > 0;) {
      if (y[i] < level) {
        const double frac = (y[i + 1] - level) / (y[i + 1] - y[i]);
        left = hist.section_center(i + 1) - frac * static_cast<double>(hist.section_ps);
        break;
      }
    }
    return right - left;
  };
  m.fwhm_ps = width_at(0.5);
  m.full_width_ps = width_at(options.full_width_fraction);
  return m;
}

}  // namespace chronocal
