#include "chronocal/geometry.hpp"

#include <limits>
#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {

void DetectorGeometry::validate() const {
  constexpr std::uint32_t kMax16 = std::numeric_limits<std::uint16_t>::max();
  if (rows < 1 || cols < 1) throw GeometryError("geometry: rows and cols must be >= 1");
  if (n_codes < 2) throw GeometryError("geometry: n_codes must be >= 2");
  if (bin_ps == 0) throw GeometryError("geometry: bin_ps must be > 0");
  if (rows > kMax16 || cols > kMax16 || n_codes > kMax16 || bin_ps > kMax16) {
    throw GeometryError("geometry: fields must fit in 16 bits (rows=" + std::to_string(rows) +
                        ", cols=" + std::to_string(cols) + ", n_codes=" +
                        std::to_string(n_codes) + ", bin_ps=" + std::to_string(bin_ps) + ")");
  }
}

}  // namespace chronocal
