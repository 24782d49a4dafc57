#include "chronocal/lut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {
namespace {

double median_inplace(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Per-pixel entries with fallbacks filled in; offsets left empty.
CorrectionLut prepare(std::span<const DriftModel> models, const DetectorGeometry& geometry,
                      double reference_ps, const ReferencePolicy& policy) {
  geometry.validate();
  if (models.empty()) throw CalibrationError("build_lut: no calibrated pixels");
  CorrectionLut lut;
  lut.geometry = geometry;
  lut.reference_ps = reference_ps;
  lut.policy = policy;
  lut.degree = 0;
  for (const auto& m : models) lut.degree = std::max(lut.degree, m.degree);

  const DriftModel fallback = median_model(models);
  lut.pixels.resize(geometry.pixel_count());
  for (std::uint32_t p = 0; p < geometry.pixel_count(); ++p) {
    lut.pixels[p].model = fallback;
    lut.pixels[p].model.pixel = geometry.pixel(p);
    lut.pixels[p].calibrated = false;
  }
  for (const auto& m : models) {
    if (!geometry.contains(m.pixel)) {
      throw GeometryError("build_lut: model pixel (" + std::to_string(m.pixel.row) + "," +
                          std::to_string(m.pixel.col) + ") outside geometry");
    }
    auto& entry = lut.pixels[geometry.linear(m.pixel)];
    if (entry.calibrated) {
      throw CalibrationError("build_lut: duplicate model for pixel " +
                             std::to_string(geometry.linear(m.pixel)));
    }
    entry.model = m;
    entry.calibrated = true;
  }
  lut.offsets.assign(geometry.pixel_count() * geometry.n_codes, 0);
  return lut;
}

void expand_pixel(CorrectionLut& lut, std::size_t p) {
  const auto n_codes = lut.geometry.n_codes;
  const auto& model = lut.pixels[p].model;
  auto* row = lut.offsets.data() + p * n_codes;
  for (std::uint32_t c = 0; c < n_codes; ++c) row[c] = offset_for(lut.reference_ps, model, c);
}

}  // namespace

std::int32_t offset_for(double reference_ps, const DriftModel& model, std::uint32_t code) {
  constexpr double lo = std::numeric_limits<std::int32_t>::min();
  constexpr double hi = std::numeric_limits<std::int32_t>::max();
  return static_cast<std::int32_t>(std::llround(std::clamp(reference_ps - model(code), lo, hi)));
}

CorrectionLut CorrectionLut::zero(const DetectorGeometry& geometry) {
  geometry.validate();
  CorrectionLut lut;
  lut.geometry = geometry;
  lut.policy.kind = ReferencePolicy::Kind::fixed;
  lut.pixels.resize(geometry.pixel_count());
  for (std::uint32_t p = 0; p < geometry.pixel_count(); ++p) {
    lut.pixels[p].model.pixel = geometry.pixel(p);
    lut.pixels[p].model.valid_code_max = geometry.n_codes - 1;
    lut.pixels[p].calibrated = true;
  }
  lut.offsets.assign(geometry.pixel_count() * geometry.n_codes, 0);
  return lut;
}

DriftModel median_model(std::span<const DriftModel> models) {
  if (models.empty()) throw CalibrationError("median_model: no models");
  DriftModel out;
  out.degree = 0;
  std::vector<double> v;
  v.reserve(models.size());
  for (std::size_t k = 0; k < 3; ++k) {
    v.clear();
    for (const auto& m : models) v.push_back(m.coeffs[k]);
    out.coeffs[k] = median_inplace(v);
  }
  v.clear();
  for (const auto& m : models) {
    v.push_back(m.valid_code_max);
    out.degree = std::max(out.degree, m.degree);
  }
  out.valid_code_max = static_cast<std::uint32_t>(std::floor(median_inplace(v)));
  return out;
}

namespace serial {

CorrectionLut build_lut(std::span<const DriftModel> models, const DetectorGeometry& geometry,
                        double reference_ps, const ReferencePolicy& policy) {
  auto lut = prepare(models, geometry, reference_ps, policy);
  for (std::size_t p = 0; p < lut.pixels.size(); ++p) expand_pixel(lut, p);
  return lut;
}

}  // namespace serial

CorrectionLut build_lut(std::span<const DriftModel> models, const DetectorGeometry& geometry,
                        double reference_ps, const ReferencePolicy& policy) {
  auto lut = prepare(models, geometry, reference_ps, policy);
  const auto n = static_cast<std::int64_t>(lut.pixels.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) expand_pixel(lut, static_cast<std::size_t>(p));
  return lut;
}

}  // namespace chronocal
