#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chronocal {

/// Base of every error raised by the library. The CLI maps IoError to exit
/// code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::size_t bytes_written = 0)
      : Error(what), bytes_written_(bytes_written) {}
  std::size_t bytes_written() const noexcept { return bytes_written_; }

 private:
  std::size_t bytes_written_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::uint64_t offset)
      : Error(what), offset_(offset) {}
  /// Byte offset of the last complete record boundary.
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class RangeError : public Error {
 public:
  RangeError(const std::string& what, std::uint64_t index = 0)
      : Error(what), index_(index) {}
  std::uint64_t index() const noexcept { return index_; }

 private:
  std::uint64_t index_;
};

class OrderError : public Error {
 public:
  OrderError(const std::string& what, std::uint64_t index)
      : Error(what), index_(index) {}
  /// Index of the first event whose timestamp goes backwards.
  std::uint64_t index() const noexcept { return index_; }

 private:
  std::uint64_t index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MergeError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class InsufficientGroups : public Error {
 public:
  InsufficientGroups(const std::string& what, int accepted)
      : Error(what), accepted_(accepted) {}
  int accepted() const noexcept { return accepted_; }

 private:
  int accepted_;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class NoPeak : public Error {
 public:
  using Error::Error;
};

}  // namespace chronocal
