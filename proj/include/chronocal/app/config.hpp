#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "chronocal/drift_model.hpp"
#include "chronocal/simulator.hpp"

namespace chronocal::app {

struct AnalysisOptions {
  std::uint32_t group_size = 16;
  std::int64_t section_ps = 100;
  std::int64_t window_ps = 25'000;
  std::uint64_t min_counts = 100;
  int poly_degree = 2;
  ReferencePolicy reference;
  double full_width_fraction = 0.05;
};

struct PipelineConfig {
  SimulationConfig simulation;
  AnalysisOptions analysis;
};

/// Sections of `key = value` lines from the TOML subset used by config
/// files: [section] headers, numbers, bare words or double-quoted strings,
/// and # comments.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& origin = "config");

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Unknown sections or keys and malformed values raise ConfigError.
PipelineConfig parse_pipeline_config(std::istream& in, const std::string& origin = "config");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Effective configuration, in the same TOML subset (round-trips through
/// parse_pipeline_config).
std::string to_toml(const PipelineConfig& config);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace chronocal::app
