#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "chronocal/events.hpp"
#include "chronocal/geometry.hpp"

namespace chronocal {

// Binary event file ("PTEV"), little-endian:
//   header  16 B: magic[4] "PTEV", version u16, record type u8, reserved u8,
//                 rows u16, cols u16, n_codes u16, bin_ps u16
//   reference record  8 B: time_ps u64
//   imager record    16 B: time_ps u64, pixel u32 (row * cols + col),
//                          tdc_code u16, reserved u16

enum class RecordType : std::uint8_t { reference = 0, imager = 1 };

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr std::size_t kReferenceRecordBytes = 8;
inline constexpr std::size_t kImagerRecordBytes = 16;

constexpr std::size_t record_bytes(RecordType type) {
  return type == RecordType::reference ? kReferenceRecordBytes : kImagerRecordBytes;
}

/// Writes header plus records and returns the number of bytes written.
/// Streams must be time-sorted (OrderError otherwise); a failing sink raises
/// IoError carrying the bytes successfully written.
std::size_t encode_events(std::span<const ReferenceEvent> events, const DetectorGeometry& geometry,
                          std::ostream& sink);
std::size_t encode_events(std::span<const ImagerEvent> events, const DetectorGeometry& geometry,
                          std::ostream& sink);

struct EventFile {
  DetectorGeometry geometry;
  RecordType type = RecordType::reference;
  std::vector<ReferenceEvent> reference;
  std::vector<ImagerEvent> imager;
  /// False when decoding had to sort the records.
  bool was_sorted = true;
};

/// Decodes a binary event file. Records come back in file order unless the
/// file was unsorted, in which case they are sorted and was_sorted is false.
EventFile decode_events(std::istream& source);

// CSV alternative: header `time_ps` or `time_ps,pixel,tdc_code` (pixel is the
// linear index), one decimal event per line. CSV carries no geometry, so the
// reader takes it from the caller.
void write_events_csv(std::span<const ReferenceEvent> events, std::ostream& out);
void write_events_csv(std::span<const ImagerEvent> events, const DetectorGeometry& geometry,
                      std::ostream& out);
EventFile read_events_csv(std::istream& in, const DetectorGeometry& geometry);

/// File helpers; ".csv" selects the CSV format, anything else is binary.
void save_events(const std::filesystem::path& path, std::span<const ReferenceEvent> events,
                 const DetectorGeometry& geometry);
void save_events(const std::filesystem::path& path, std::span<const ImagerEvent> events,
                 const DetectorGeometry& geometry);
EventFile load_events(const std::filesystem::path& path,
                      const DetectorGeometry& csv_geometry = DetectorGeometry{});

}  // namespace chronocal
