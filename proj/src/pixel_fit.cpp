#include "chronocal/pixel_fit.hpp"

#include <exception>

#include "chronocal/errors.hpp"

namespace chronocal {
namespace {

struct PixelSlice {
  std::uint32_t pixel;
  std::vector<const CoincidenceHistogram*> groups;  // nullptr where absent
};

std::vector<PixelSlice> slice_by_pixel(const HistogramSet& set) {
  const auto n_groups = set.layout.group_count(set.geometry.n_codes);
  std::vector<PixelSlice> slices;
  for (const auto& [key, h] : set.histograms) {
    if (slices.empty() || slices.back().pixel != key.pixel) {
      slices.push_back({key.pixel, std::vector<const CoincidenceHistogram*>(n_groups, nullptr)});
    }
    slices.back().groups[key.group] = &h;
  }
  return slices;
}

PixelCalibration calibrate_pixel(const PixelSlice& slice, const HistogramSet& set,
                                 const DriftFitOptions& options) {
  PixelCalibration out;
  out.pixel = set.geometry.pixel(slice.pixel);
  out.group_fits.resize(slice.groups.size());
  for (std::size_t g = 0; g < slice.groups.size(); ++g) {
    if (slice.groups[g] != nullptr) {
      out.group_fits[g] = fit_gaussian(*slice.groups[g], options.min_counts);
    }
  }
  try {
    out.model = estimate_drift(out.pixel, out.group_fits, options, set.geometry.n_codes);
  } catch (const InsufficientGroups& e) {
    out.failure = e.what();
  }
  return out;
}

DriftFitOptions with_set_grouping(DriftFitOptions options, const HistogramSet& set) {
  options.group_size = set.layout.group_size;
  return options;
}

}  // namespace

namespace serial {

std::vector<PixelCalibration> fit_pixels(const HistogramSet& set, const DriftFitOptions& options) {
  const auto opts = with_set_grouping(options, set);
  const auto slices = slice_by_pixel(set);
  std::vector<PixelCalibration> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(calibrate_pixel(s, set, opts));
  return out;
}

}  // namespace serial

std::vector<PixelCalibration> fit_pixels(const HistogramSet& set, const DriftFitOptions& options) {
  const auto opts = with_set_grouping(options, set);
  if (opts.degree < 0 || opts.degree > 2) throw ConfigError("polynomial degree must be 0, 1 or 2");
  const auto slices = slice_by_pixel(set);
  std::vector<PixelCalibration> out(slices.size());
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(slices.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = calibrate_pixel(slices[static_cast<std::size_t>(i)], set, opts);
    } catch (...) {
#pragma omp critical(chronocal_fit_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<DriftModel> calibrated_models(const std::vector<PixelCalibration>& pixels) {
  std::vector<DriftModel> models;
  for (const auto& p : pixels) {
    if (p.model) models.push_back(*p.model);
  }
  return models;
}

}  // namespace chronocal
