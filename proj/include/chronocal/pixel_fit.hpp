#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chronocal/drift_model.hpp"
#include "chronocal/histogram.hpp"

namespace chronocal {

/// Gaussian fits for every group of one pixel plus its drift model, or the
/// reason no model could be built.
struct PixelCalibration {
  PixelId pixel;
  std::vector<GaussianFit> group_fits;  // indexed by group
  std::optional<DriftModel> model;
  std::string failure;
};

/// OpenMP kernel: pixels are fitted independently, one result per pixel that
/// owns at least one histogram, ordered by linear pixel index. The set's
/// group size is used; options.group_size is ignored.
std::vector<PixelCalibration> fit_pixels(const HistogramSet& set, const DriftFitOptions& options);

namespace serial {
std::vector<PixelCalibration> fit_pixels(const HistogramSet& set, const DriftFitOptions& options);
}  // namespace serial

/// Calibrated models from a fit_pixels result.
std::vector<DriftModel> calibrated_models(const std::vector<PixelCalibration>& pixels);

}  // namespace chronocal
