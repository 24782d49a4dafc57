#include "chronocal/event_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "chronocal/errors.hpp"

namespace chronocal {
namespace {

constexpr std::array<char, 4> kMagic = {'P', 'T', 'E', 'V'};

template <class T>
void put_le(unsigned char* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(value) >> (8 * i));
  }
}

template <class T>
T get_le(const unsigned char* src) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return static_cast<T>(v);
}

std::array<unsigned char, kHeaderBytes> make_header(RecordType type, const DetectorGeometry& g) {
  std::array<unsigned char, kHeaderBytes> h{};
  std::memcpy(h.data(), kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(h.data() + 4, kFormatVersion);
  h[6] = static_cast<unsigned char>(type);
  h[7] = 0;
  put_le<std::uint16_t>(h.data() + 8, static_cast<std::uint16_t>(g.rows));
  put_le<std::uint16_t>(h.data() + 10, static_cast<std::uint16_t>(g.cols));
  put_le<std::uint16_t>(h.data() + 12, static_cast<std::uint16_t>(g.n_codes));
  put_le<std::uint16_t>(h.data() + 14, static_cast<std::uint16_t>(g.bin_ps));
  return h;
}

// Buffers records and flushes in blocks; tracks bytes that reached the sink.
class BlockWriter {
 public:
  explicit BlockWriter(std::ostream& sink) : sink_(sink) { buffer_.reserve(kBlock); }

  void put(const unsigned char* data, std::size_t n) {
    buffer_.insert(buffer_.end(), data, data + n);
    if (buffer_.size() >= kBlock) flush();
  }

  std::size_t finish() {
    flush();
    sink_.flush();
    if (!sink_) throw IoError("event encode: sink flush failed", written_);
    return written_;
  }

 private:
  static constexpr std::size_t kBlock = 1 << 16;

  void flush() {
    if (buffer_.empty()) return;
    const auto before = sink_.tellp();
    sink_.write(reinterpret_cast<const char*>(buffer_.data()),
                static_cast<std::streamsize>(buffer_.size()));
    if (!sink_) {
      std::size_t partial = 0;
      sink_.clear();
      const auto after = sink_.tellp();
      if (before >= 0 && after >= before) partial = static_cast<std::size_t>(after - before);
      throw IoError("event encode: write failed after " + std::to_string(written_ + partial) +
                        " bytes",
                    written_ + partial);
    }
    written_ += buffer_.size();
    buffer_.clear();
  }

  std::ostream& sink_;
  std::vector<unsigned char> buffer_;
  std::size_t written_ = 0;
};

template <class Event>
void require_sorted(std::span<const Event> events) {
  const std::size_t bad = first_unsorted(events);
  if (bad != events.size()) {
    throw OrderError("event encode: stream not sorted by time at index " + std::to_string(bad),
                     bad);
  }
}

bool read_exact(std::istream& in, unsigned char* dst, std::size_t n, std::size_t& got) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  got = static_cast<std::size_t>(in.gcount());
  return got == n;
}

}  // namespace

std::size_t encode_events(std::span<const ReferenceEvent> events, const DetectorGeometry& geometry,
                          std::ostream& sink) {
  geometry.validate();
  require_sorted(events);
  BlockWriter w(sink);
  const auto header = make_header(RecordType::reference, geometry);
  w.put(header.data(), header.size());
  unsigned char rec[kReferenceRecordBytes];
  for (const auto& e : events) {
    put_le<std::uint64_t>(rec, e.time_ps);
    w.put(rec, sizeof rec);
  }
  return w.finish();
}

std::size_t encode_events(std::span<const ImagerEvent> events, const DetectorGeometry& geometry,
                          std::ostream& sink) {
  geometry.validate();
  require_sorted(events);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!geometry.contains(events[i].pixel) || events[i].tdc_code >= geometry.n_codes) {
      throw RangeError("event encode: imager event " + std::to_string(i) +
                           " outside detector geometry",
                       i);
    }
  }
  BlockWriter w(sink);
  const auto header = make_header(RecordType::imager, geometry);
  w.put(header.data(), header.size());
  unsigned char rec[kImagerRecordBytes];
  for (const auto& e : events) {
    put_le<std::uint64_t>(rec, e.time_ps);
    put_le<std::uint32_t>(rec + 8, geometry.linear(e.pixel));
    put_le<std::uint16_t>(rec + 12, e.tdc_code);
    put_le<std::uint16_t>(rec + 14, 0);
    w.put(rec, sizeof rec);
  }
  return w.finish();
}

EventFile decode_events(std::istream& source) {
  std::array<unsigned char, kHeaderBytes> h{};
  std::size_t got = 0;
  if (!read_exact(source, h.data(), h.size(), got)) {
    throw TruncationError("event decode: header truncated (" + std::to_string(got) + " of 16 bytes)",
                          0);
  }
  if (std::memcmp(h.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("event decode: bad magic, expected \"PTEV\"");
  }
  const auto version = get_le<std::uint16_t>(h.data() + 4);
  if (version != kFormatVersion) {
    throw FormatError("event decode: unsupported version " + std::to_string(version));
  }
  if (h[6] > 1) throw FormatError("event decode: unknown record type " + std::to_string(h[6]));

  EventFile file;
  file.type = static_cast<RecordType>(h[6]);
  file.geometry.rows = get_le<std::uint16_t>(h.data() + 8);
  file.geometry.cols = get_le<std::uint16_t>(h.data() + 10);
  file.geometry.n_codes = get_le<std::uint16_t>(h.data() + 12);
  file.geometry.bin_ps = get_le<std::uint16_t>(h.data() + 14);
  try {
    file.geometry.validate();
  } catch (const GeometryError& e) {
    throw FormatError(std::string("event decode: invalid header geometry: ") + e.what());
  }

  const std::size_t rec_size = record_bytes(file.type);
  const std::uint32_t n_pixels = static_cast<std::uint32_t>(file.geometry.pixel_count());
  std::vector<unsigned char> block(rec_size * 4096);
  std::uint64_t index = 0;
  for (;;) {
    source.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size()));
    const auto n = static_cast<std::size_t>(source.gcount());
    const std::size_t whole = n / rec_size;
    for (std::size_t r = 0; r < whole; ++r, ++index) {
      const unsigned char* p = block.data() + r * rec_size;
      if (file.type == RecordType::reference) {
        file.reference.push_back({get_le<std::uint64_t>(p)});
        continue;
      }
      const auto linear = get_le<std::uint32_t>(p + 8);
      const auto code = get_le<std::uint16_t>(p + 12);
      if (linear >= n_pixels) {
        throw RangeError("event decode: pixel index " + std::to_string(linear) +
                             " out of range at record " + std::to_string(index),
                         index);
      }
      if (code >= file.geometry.n_codes) {
        throw RangeError("event decode: tdc_code " + std::to_string(code) +
                             " >= n_codes at record " + std::to_string(index),
                         index);
      }
      file.imager.push_back({get_le<std::uint64_t>(p), file.geometry.pixel(linear), code});
    }
    if (n % rec_size != 0) {
      const std::uint64_t boundary = kHeaderBytes + index * rec_size;
      throw TruncationError("event decode: truncated record at byte " + std::to_string(boundary),
                            boundary);
    }
    if (n < block.size()) break;
  }

  if (file.type == RecordType::reference) {
    file.was_sorted = sort_by_time(file.reference);
  } else {
    file.was_sorted = sort_by_time(file.imager);
  }
  return file;
}

void write_events_csv(std::span<const ReferenceEvent> events, std::ostream& out) {
  out << "time_ps\n";
  for (const auto& e : events) out << e.time_ps << '\n';
  if (!out) throw IoError("csv write failed");
}

void write_events_csv(std::span<const ImagerEvent> events, const DetectorGeometry& geometry,
                      std::ostream& out) {
  out << "time_ps,pixel,tdc_code\n";
  for (const auto& e : events) {
    out << e.time_ps << ',' << geometry.linear(e.pixel) << ',' << e.tdc_code << '\n';
  }
  if (!out) throw IoError("csv write failed");
}

namespace {

std::uint64_t parse_u64(std::string_view field, std::uint64_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw FormatError("csv: bad integer '" + std::string(field) + "' on line " +
                      std::to_string(line));
  }
  return v;
}

}  // namespace

EventFile read_events_csv(std::istream& in, const DetectorGeometry& geometry) {
  geometry.validate();
  EventFile file;
  file.geometry = geometry;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == "time_ps") {
    file.type = RecordType::reference;
  } else if (line == "time_ps,pixel,tdc_code") {
    file.type = RecordType::imager;
  } else {
    throw FormatError("csv: unrecognized header '" + line + "'");
  }
  std::uint64_t line_no = 1;
  std::uint64_t index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (file.type == RecordType::reference) {
      file.reference.push_back({parse_u64(line, line_no)});
    } else {
      const auto c1 = line.find(',');
      const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
      if (c2 == std::string::npos) {
        throw FormatError("csv: expected 3 fields on line " + std::to_string(line_no));
      }
      const std::string_view sv(line);
      const auto t = parse_u64(sv.substr(0, c1), line_no);
      const auto linear = parse_u64(sv.substr(c1 + 1, c2 - c1 - 1), line_no);
      const auto code = parse_u64(sv.substr(c2 + 1), line_no);
      if (linear >= geometry.pixel_count()) {
        throw RangeError("csv: pixel out of range on line " + std::to_string(line_no), index);
      }
      if (code >= geometry.n_codes) {
        throw RangeError("csv: tdc_code >= n_codes on line " + std::to_string(line_no), index);
      }
      file.imager.push_back({t, geometry.pixel(static_cast<std::uint32_t>(linear)),
                             static_cast<std::uint16_t>(code)});
    }
    ++index;
  }
  if (file.type == RecordType::reference) {
    file.was_sorted = sort_by_time(file.reference);
  } else {
    file.was_sorted = sort_by_time(file.imager);
  }
  return file;
}

namespace {

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

void save_events(const std::filesystem::path& path, std::span<const ReferenceEvent> events,
                 const DetectorGeometry& geometry) {
  auto out = open_out(path);
  if (is_csv(path)) {
    write_events_csv(events, out);
  } else {
    encode_events(events, geometry, out);
  }
}

void save_events(const std::filesystem::path& path, std::span<const ImagerEvent> events,
                 const DetectorGeometry& geometry) {
  auto out = open_out(path);
  if (is_csv(path)) {
    write_events_csv(events, geometry, out);
  } else {
    encode_events(events, geometry, out);
  }
}

EventFile load_events(const std::filesystem::path& path, const DetectorGeometry& csv_geometry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return is_csv(path) ? read_events_csv(in, csv_geometry) : decode_events(in);
}

}  // namespace chronocal
