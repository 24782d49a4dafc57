#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chronocal/events.hpp"

namespace chronocal {

inline constexpr std::int64_t kDefaultWindowHalfWidthPs = 25'000;

struct CoincidencePair {
  PixelId pixel;
  std::uint16_t tdc_code = 0;
  /// imager time - reference time
  std::int64_t dt_ps = 0;

  friend bool operator==(const CoincidencePair&, const CoincidencePair&) = default;
  friend auto operator<=>(const CoincidencePair&, const CoincidencePair&) = default;
};

/// Emits every (imager, reference) combination with |dt| <= window, ordered
/// by imager event and then by reference time. Two-pointer sweep, O(N + M + K).
/// Throws OrderError if either stream goes backwards in time, ConfigError if
/// the window is not positive.
std::vector<CoincidencePair> find_coincidences(std::span<const ImagerEvent> imager,
                                               std::span<const ReferenceEvent> reference,
                                               std::int64_t window_half_width_ps);

}  // namespace chronocal
