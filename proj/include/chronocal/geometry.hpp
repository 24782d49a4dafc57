#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>

namespace chronocal {

struct PixelId {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend auto operator<=>(const PixelId&, const PixelId&) = default;
};

/// Array shape and nominal TDC timing of the imager under test.
struct DetectorGeometry {
  std::uint32_t rows = 32;
  std::uint32_t cols = 32;
  std::uint32_t n_codes = 256;
  std::uint32_t bin_ps = 210;

  /// Throws GeometryError unless rows, cols >= 1, n_codes >= 2, bin_ps > 0
  /// and every field fits the 16-bit file header.
  void validate() const;

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(rows) * cols;
  }
  bool contains(PixelId p) const noexcept { return p.row < rows && p.col < cols; }
  std::uint32_t linear(PixelId p) const noexcept { return p.row * cols + p.col; }
  PixelId pixel(std::uint32_t linear_index) const noexcept {
    return {linear_index / cols, linear_index % cols};
  }

  friend bool operator==(const DetectorGeometry&, const DetectorGeometry&) = default;
};

}  // namespace chronocal
