#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "chronocal/geometry.hpp"

namespace chronocal {

/// Idler detection on the reference detector.
struct ReferenceEvent {
  std::uint64_t time_ps = 0;

  friend bool operator==(const ReferenceEvent&, const ReferenceEvent&) = default;
};

/// Signal detection on the imager: reconstructed global time plus raw TDC code.
struct ImagerEvent {
  std::uint64_t time_ps = 0;
  PixelId pixel;
  std::uint16_t tdc_code = 0;

  friend bool operator==(const ImagerEvent&, const ImagerEvent&) = default;
};

inline bool event_less(const ReferenceEvent& a, const ReferenceEvent& b) {
  return a.time_ps < b.time_ps;
}

/// Total order used whenever imager streams are (re)sorted, so ties in time
/// resolve identically on every run.
inline bool event_less(const ImagerEvent& a, const ImagerEvent& b) {
  return std::tie(a.time_ps, a.pixel, a.tdc_code) < std::tie(b.time_ps, b.pixel, b.tdc_code);
}

/// Index of the first event whose time goes backwards, or size() if sorted.
template <class Event>
std::size_t first_unsorted(std::span<const Event> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].time_ps < events[i - 1].time_ps) return i;
  }
  return events.size();
}

/// Sorts in place; returns true if the input was already time-ordered.
template <class Event>
bool sort_by_time(std::vector<Event>& events) {
  if (first_unsorted(std::span<const Event>(events)) == events.size()) return true;
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return event_less(a, b); });
  return false;
}

}  // namespace chronocal
