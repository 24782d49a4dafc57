#include "chronocal/histogram.hpp"

#include <omp.h>

#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {
namespace {

std::string key_name(const HistogramKey& k) {
  return "(pixel " + std::to_string(k.pixel) + ", group " + std::to_string(k.group) + ")";
}

// Dense slot table over (pixel, group) with lazily allocated count rows;
// avoids map lookups in the hot loop.
class Binner {
 public:
  Binner(const DetectorGeometry& geometry, const HistogramLayout& layout)
      : geometry_(geometry),
        layout_(layout),
        groups_(layout.group_count(geometry.n_codes)),
        slot_(geometry.pixel_count() * groups_, -1) {}

  void add(const CoincidencePair& pair) {
    const auto section = layout_.section_of(pair.dt_ps);
    if (section < 0) return;
    const auto key = static_cast<std::size_t>(geometry_.linear(pair.pixel)) * groups_ +
                     pair.tdc_code / layout_.group_size;
    auto& s = slot_[key];
    if (s < 0) {
      s = static_cast<std::int64_t>(rows_.size());
      rows_.emplace_back(layout_.n_sections, 0);
      keys_.push_back(key);
    }
    ++rows_[static_cast<std::size_t>(s)][static_cast<std::size_t>(section)];
  }

  void add_all(std::span<const CoincidencePair> pairs) {
    for (const auto& p : pairs) {
      if (!geometry_.contains(p.pixel) || p.tdc_code >= geometry_.n_codes) {
        throw RangeError("histogram: pair outside detector geometry");
      }
      add(p);
    }
  }

  HistogramSet finish() && {
    HistogramSet set;
    set.geometry = geometry_;
    set.layout = layout_;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      const auto pixel = static_cast<std::uint32_t>(keys_[i] / groups_);
      const auto group = static_cast<std::uint32_t>(keys_[i] % groups_);
      CoincidenceHistogram h;
      h.pixel = geometry_.pixel(pixel);
      h.group = group;
      h.section_ps = layout_.section_ps;
      h.origin_ps = layout_.origin_ps;
      h.counts = std::move(rows_[i]);
      for (auto c : h.counts) h.total += c;
      set.histograms.emplace(HistogramKey{pixel, group}, std::move(h));
    }
    return set;
  }

 private:
  DetectorGeometry geometry_;
  HistogramLayout layout_;
  std::size_t groups_;
  std::vector<std::int64_t> slot_;
  std::vector<std::vector<std::uint64_t>> rows_;
  std::vector<std::size_t> keys_;
};

void merge_into(HistogramSet& into, HistogramSet&& from) {
  for (auto& [key, h] : from.histograms) {
    auto it = into.histograms.find(key);
    if (it == into.histograms.end()) {
      into.histograms.emplace(key, std::move(h));
    } else {
      accumulate(it->second, h);
    }
  }
}

}  // namespace

HistogramLayout HistogramLayout::make(std::int64_t window_ps, std::int64_t section_ps,
                                      std::uint32_t group_size) {
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  if (section_ps < 1) throw ConfigError("section_ps must be >= 1");
  if (window_ps < 1) throw ConfigError("window_ps must be >= 1");
  HistogramLayout l;
  l.window_ps = window_ps;
  l.section_ps = section_ps;
  l.origin_ps = -window_ps;
  l.n_sections = static_cast<std::uint32_t>((2 * window_ps + section_ps - 1) / section_ps);
  l.group_size = group_size;
  return l;
}

std::int64_t HistogramLayout::section_of(std::int64_t dt_ps) const noexcept {
  if (dt_ps < -window_ps || dt_ps > window_ps) return -1;
  const auto i = (dt_ps - origin_ps) / section_ps;
  return i >= n_sections ? n_sections - 1 : i;
}

std::uint64_t HistogramSet::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, h] : histograms) t += h.total;
  return t;
}

namespace serial {

HistogramSet build_histograms(std::span<const CoincidencePair> pairs,
                              const DetectorGeometry& geometry, std::uint32_t group_size,
                              std::int64_t section_ps, std::int64_t window_half_width_ps) {
  geometry.validate();
  const auto layout = HistogramLayout::make(window_half_width_ps, section_ps, group_size);
  Binner binner(geometry, layout);
  binner.add_all(pairs);
  auto set = std::move(binner).finish();
  return set;
}

}  // namespace serial

HistogramSet build_histograms(std::span<const CoincidencePair> pairs,
                              const DetectorGeometry& geometry, std::uint32_t group_size,
                              std::int64_t section_ps, std::int64_t window_half_width_ps) {
  geometry.validate();
  const auto layout = HistogramLayout::make(window_half_width_ps, section_ps, group_size);
  for (const auto& p : pairs) {
    if (!geometry.contains(p.pixel) || p.tdc_code >= geometry.n_codes) {
      throw RangeError("histogram: pair outside detector geometry");
    }
  }

  const int n_threads = omp_get_max_threads();
  std::vector<HistogramSet> partial(static_cast<std::size_t>(n_threads));
#pragma omp parallel num_threads(n_threads)
  {
    const int t = omp_get_thread_num();
    const int nt = omp_get_num_threads();
    const std::size_t begin = pairs.size() * static_cast<std::size_t>(t) / nt;
    const std::size_t end = pairs.size() * static_cast<std::size_t>(t + 1) / nt;
    Binner binner(geometry, layout);
    for (std::size_t i = begin; i < end; ++i) binner.add(pairs[i]);
    partial[static_cast<std::size_t>(t)] = std::move(binner).finish();
  }

  HistogramSet set;
  set.geometry = geometry;
  set.layout = layout;
  for (auto& part : partial) {
    if (part.histograms.empty()) continue;
    merge_into(set, std::move(part));
  }
  return set;
}

void accumulate(CoincidenceHistogram& into, const CoincidenceHistogram& from) {
  if (!into.same_shape(from)) {
    throw MergeError("histogram shape mismatch for (pixel " + std::to_string(from.pixel.row) +
                     "," + std::to_string(from.pixel.col) + ", group " +
                     std::to_string(from.group) + ")");
  }
  for (std::size_t i = 0; i < from.counts.size(); ++i) into.counts[i] += from.counts[i];
  into.total += from.total;
}

HistogramSet merge_histograms(const HistogramSet& a, const HistogramSet& b) {
  if (a.histograms.empty()) return b;
  if (b.histograms.empty()) return a;
  if (!(a.geometry == b.geometry)) throw MergeError("merge: detector geometries differ");
  if (a.layout.group_size != b.layout.group_size) throw MergeError("merge: group sizes differ");
  HistogramSet out = a;
  for (const auto& [key, h] : b.histograms) {
    auto it = out.histograms.find(key);
    if (it == out.histograms.end()) {
      out.histograms.emplace(key, h);
      continue;
    }
    if (!it->second.same_shape(h)) {
      throw MergeError("merge: shape mismatch for key " + key_name(key));
    }
    accumulate(it->second, h);
  }
  if (!(a.layout == b.layout)) {
    // shared keys already checked; keep the layout of the first input only
    // when every histogram agrees with it
    for (const auto& [key, h] : out.histograms) {
      if (h.section_ps != out.layout.section_ps || h.origin_ps != out.layout.origin_ps ||
          h.counts.size() != out.layout.n_sections) {
        throw MergeError("merge: layouts differ for key " + key_name(key));
      }
    }
  }
  return out;
}

CoincidenceHistogram aggregate(const HistogramSet& set) {
  CoincidenceHistogram agg;
  agg.section_ps = set.layout.section_ps;
  agg.origin_ps = set.layout.origin_ps;
  agg.counts.assign(set.layout.n_sections, 0);
  for (const auto& [key, h] : set.histograms) accumulate(agg, h);
  return agg;
}

HistogramSet regroup(const HistogramSet& set, std::uint32_t new_group_size) {
  if (new_group_size < 1 || new_group_size % set.layout.group_size != 0) {
    throw ConfigError("regroup: group size " + std::to_string(new_group_size) +
                      " is not a multiple of " + std::to_string(set.layout.group_size));
  }
  HistogramSet out;
  out.geometry = set.geometry;
  out.layout = set.layout;
  out.layout.group_size = new_group_size;
  const std::uint32_t factor = new_group_size / set.layout.group_size;
  for (const auto& [key, h] : set.histograms) {
    const HistogramKey nk{key.pixel, key.group / factor};
    auto it = out.histograms.find(nk);
    if (it == out.histograms.end()) {
      auto copy = h;
      copy.group = nk.group;
      out.histograms.emplace(nk, std::move(copy));
    } else {
      accumulate(it->second, h);
    }
  }
  return out;
}

}  // namespace chronocal
