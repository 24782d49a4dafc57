#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "chronocal/drift_model.hpp"
#include "chronocal/geometry.hpp"

namespace chronocal {

struct PixelEntry {
  DriftModel model;
  /// False for pixels without their own model; they carry the array-median
  /// polynomial instead.
  bool calibrated = false;
};

/// Per-(pixel, code) additive correction, offsets[p][c] =
/// round(reference_ps - poly_p(c)), row-major over pixels then code.
struct CorrectionLut {
  DetectorGeometry geometry;
  double reference_ps = 0.0;
  ReferencePolicy policy;
  int degree = 2;
  std::vector<PixelEntry> pixels;
  std::vector<std::int32_t> offsets;

  std::int32_t offset(PixelId p, std::uint32_t code) const noexcept {
    return offsets[(static_cast<std::size_t>(geometry.linear(p))) * geometry.n_codes + code];
  }
  /// Entry lies above the pixel's valid_code_max (polynomial extrapolated).
  bool extrapolated(PixelId p, std::uint32_t code) const noexcept {
    return code > pixels[geometry.linear(p)].model.valid_code_max;
  }
  bool calibrated(PixelId p) const noexcept { return pixels[geometry.linear(p)].calibrated; }

  static CorrectionLut zero(const DetectorGeometry& geometry);
};

/// round(reference_ps - model(code)), saturated to int32.
std::int32_t offset_for(double reference_ps, const DriftModel& model, std::uint32_t code);

/// Coefficient-wise median of the models; the fallback for pixels without a
/// model of their own.
DriftModel median_model(std::span<const DriftModel> models);

/// OpenMP kernel over pixels. models holds one entry per calibrated pixel;
/// every other pixel gets the median model and is flagged. Throws
/// CalibrationError when models is empty.
CorrectionLut build_lut(std::span<const DriftModel> models, const DetectorGeometry& geometry,
                        double reference_ps, const ReferencePolicy& policy = {});

namespace serial {
CorrectionLut build_lut(std::span<const DriftModel> models, const DetectorGeometry& geometry,
                        double reference_ps, const ReferencePolicy& policy = {});
}  // namespace serial

// JSON document (geometry, reference, per-pixel coefficients and flags) plus
// an expanded binary table of int32 little-endian offsets, rows*cols*n_codes
// entries, row-major then code.
void write_lut_json(const CorrectionLut& lut, std::ostream& out);
void write_lut_table(const CorrectionLut& lut, std::ostream& out);
/// Reads the JSON document and re-expands the offsets from the coefficients.
CorrectionLut read_lut_json(std::istream& in);
/// Replaces lut.offsets with a binary table (size must match the geometry).
void read_lut_table(std::istream& in, CorrectionLut& lut);

/// `<stem>.json` + `<stem>.bin` side by side.
void save_lut(const std::filesystem::path& json_path, const CorrectionLut& lut);
/// Loads the JSON and, when present, the sibling .bin table.
CorrectionLut load_lut(const std::filesystem::path& json_path);

}  // namespace chronocal
