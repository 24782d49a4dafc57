#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "chronocal/coincidence.hpp"
#include "chronocal/geometry.hpp"

namespace chronocal {

inline constexpr std::int64_t kDefaultSectionPs = 100;
inline constexpr std::uint32_t kDefaultGroupSize = 16;

/// Time-difference binning shared by all histograms of one analysis.
/// Sections are left-closed and right-open and anchored at -window; the last
/// section also takes dt == +window so every in-window pair lands somewhere.
struct HistogramLayout {
  std::int64_t window_ps = kDefaultWindowHalfWidthPs;
  std::int64_t section_ps = kDefaultSectionPs;
  std::int64_t origin_ps = -kDefaultWindowHalfWidthPs;
  std::uint32_t n_sections = 500;
  std::uint32_t group_size = kDefaultGroupSize;

  /// n_sections = ceil(2 * window / section). Throws ConfigError on
  /// group_size < 1, section_ps < 1 or window_ps < 1.
  static HistogramLayout make(std::int64_t window_ps, std::int64_t section_ps,
                              std::uint32_t group_size);

  /// Section index for dt, or -1 if dt lies outside [-window, +window].
  std::int64_t section_of(std::int64_t dt_ps) const noexcept;
  double section_center(std::uint32_t i) const noexcept {
    return static_cast<double>(origin_ps) + (static_cast<double>(i) + 0.5) * section_ps;
  }
  std::uint32_t group_count(std::uint32_t n_codes) const noexcept {
    return (n_codes + group_size - 1) / group_size;
  }

  friend bool operator==(const HistogramLayout&, const HistogramLayout&) = default;
};

struct CoincidenceHistogram {
  PixelId pixel;
  std::uint32_t group = 0;
  std::int64_t section_ps = kDefaultSectionPs;
  std::int64_t origin_ps = -kDefaultWindowHalfWidthPs;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  double section_center(std::size_t i) const noexcept {
    return static_cast<double>(origin_ps) + (static_cast<double>(i) + 0.5) * section_ps;
  }
  bool same_shape(const CoincidenceHistogram& o) const noexcept {
    return section_ps == o.section_ps && origin_ps == o.origin_ps &&
           counts.size() == o.counts.size();
  }

  friend bool operator==(const CoincidenceHistogram&, const CoincidenceHistogram&) = default;
};

struct HistogramKey {
  std::uint32_t pixel = 0;  // linear index
  std::uint32_t group = 0;

  friend auto operator<=>(const HistogramKey&, const HistogramKey&) = default;
};

/// Histograms keyed by (pixel, TDC group). Only keys that received at least
/// one pair (or came in through a merge) are present.
struct HistogramSet {
  DetectorGeometry geometry;
  HistogramLayout layout;
  std::map<HistogramKey, CoincidenceHistogram> histograms;

  std::uint64_t total() const;
  friend bool operator==(const HistogramSet&, const HistogramSet&) = default;
};

/// OpenMP kernel: threads bin disjoint slices of the pair list privately and
/// the partial sets are merged in slice order.
HistogramSet build_histograms(std::span<const CoincidencePair> pairs,
                              const DetectorGeometry& geometry, std::uint32_t group_size,
                              std::int64_t section_ps, std::int64_t window_half_width_ps);

namespace serial {
HistogramSet build_histograms(std::span<const CoincidencePair> pairs,
                              const DetectorGeometry& geometry, std::uint32_t group_size,
                              std::int64_t section_ps, std::int64_t window_half_width_ps);
}  // namespace serial

/// Element-wise sum per key; keys in only one input pass through. Throws
/// MergeError naming the key when shared keys differ in shape, or when the
/// sets disagree on geometry or group size.
HistogramSet merge_histograms(const HistogramSet& a, const HistogramSet& b);

/// Adds one histogram into another of the same shape (MergeError otherwise).
void accumulate(CoincidenceHistogram& into, const CoincidenceHistogram& from);

/// Sum of every histogram in the set, reported as pixel (0,0), group 0.
CoincidenceHistogram aggregate(const HistogramSet& set);

/// Re-keys to a coarser grouping; new_group_size must be a multiple of the
/// current one (ConfigError otherwise).
HistogramSet regroup(const HistogramSet& set, std::uint32_t new_group_size);

// CSV: one metadata comment line, then `pixel,group,section_index,
// section_left_edge_ps,count` for every nonzero section.
void write_histograms_csv(const HistogramSet& set, std::ostream& out);
HistogramSet read_histograms_csv(std::istream& in);

}  // namespace chronocal
