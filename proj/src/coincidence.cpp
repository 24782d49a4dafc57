#include "chronocal/coincidence.hpp"

#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {

std::vector<CoincidencePair> find_coincidences(std::span<const ImagerEvent> imager,
                                               std::span<const ReferenceEvent> reference,
                                               std::int64_t window_half_width_ps) {
  if (window_half_width_ps <= 0) throw ConfigError("coincidence window must be > 0");
  if (const auto bad = first_unsorted(imager); bad != imager.size()) {
    throw OrderError("imager stream time regression at index " + std::to_string(bad), bad);
  }
  if (const auto bad = first_unsorted(reference); bad != reference.size()) {
    throw OrderError("reference stream time regression at index " + std::to_string(bad), bad);
  }

  std::vector<CoincidencePair> out;
  if (imager.empty() || reference.empty()) return out;
  out.reserve(imager.size());

  const auto w = static_cast<std::uint64_t>(window_half_width_ps);
  std::size_t lo = 0;
  for (const auto& ev : imager) {
    const std::uint64_t t = ev.time_ps;
    const std::uint64_t start = t >= w ? t - w : 0;
    while (lo < reference.size() && reference[lo].time_ps < start) ++lo;
    for (std::size_t j = lo; j < reference.size() && reference[j].time_ps <= t + w; ++j) {
      const auto dt = static_cast<std::int64_t>(t) - static_cast<std::int64_t>(reference[j].time_ps);
      out.push_back({ev.pixel, ev.tdc_code, dt});
    }
  }
  return out;
}

}  // namespace chronocal
