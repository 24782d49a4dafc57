#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace chronocal::app {

/// Lower-case hex SHA-256 of a byte range / a file's contents.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;  // as given (relative to the output directory for outputs)
  std::string sha256;
};

/// Record of one CLI invocation. Everything except timing_ms and threads is
/// a pure function of the inputs.
struct RunManifest {
  std::string tool = "chronocal";
  std::string version;
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::map<std::string, double> timing_ms;
  int threads = 1;

  nlohmann::json to_json() const;
};

std::string tool_version();

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Digest entries for outputs, paths stored relative to base.
std::vector<FileDigest> digest_files(const std::vector<std::filesystem::path>& files,
                                     const std::filesystem::path& base);

}  // namespace chronocal::app
