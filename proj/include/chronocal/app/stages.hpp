#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronocal/app/config.hpp"
#include "chronocal/app/manifest.hpp"
#include "chronocal/histogram.hpp"
#include "chronocal/pixel_fit.hpp"

namespace chronocal::app {

namespace fs = std::filesystem;

// Each stage reads and writes files only, so any chain of stages can be
// re-run or fed hand-made inputs.

struct SimulateArtifacts {
  fs::path reference;
  fs::path imager;
  fs::path ground_truth;
  std::size_t pair_count = 0;
};
SimulateArtifacts run_simulate(const PipelineConfig& config, const fs::path& out_dir);

/// Coincides every imager file against its reference file and merges the
/// histograms. references holds either one file shared by all imager files
/// or one file per imager file.
HistogramSet coincide_files(std::span<const fs::path> imager, std::span<const fs::path> references,
                            const AnalysisOptions& options);
fs::path run_coincide(std::span<const fs::path> imager, std::span<const fs::path> references,
                      const AnalysisOptions& options, const fs::path& out_dir);

struct FitArtifacts {
  fs::path diagnostics;
  fs::path models;
  std::size_t calibrated = 0;
  std::size_t failed = 0;
};
/// Fits every pixel; options.group_size regroups the histograms when it is a
/// coarser multiple of the file's grouping. suffix is appended to the output
/// file stems (e.g. "_linear").
FitArtifacts run_fit(const fs::path& histograms_csv, const AnalysisOptions& options,
                     const fs::path& out_dir, const std::string& suffix = "");

void write_fit_diagnostics_csv(const std::vector<PixelCalibration>& pixels,
                               const DetectorGeometry& geometry, std::ostream& out);

struct DriftModelFile {
  DetectorGeometry geometry;
  std::uint32_t group_size = 16;
  int degree = 2;
  std::uint64_t min_counts = 100;
  std::vector<DriftModel> models;
  std::vector<std::pair<std::uint32_t, std::string>> failed;  // linear pixel, reason
};
void write_drift_models(const fs::path& path, const DriftModelFile& file);
DriftModelFile read_drift_models(const fs::path& path);

fs::path run_lut(const fs::path& models_json, const AnalysisOptions& options,
                 const fs::path& out_json);
fs::path run_apply(const fs::path& imager, const fs::path& lut_json, const fs::path& out_file);

/// Aggregate coincidence peak of each labelled imager stream against the
/// reference: writes peak_<label>.txt (dt_ps, counts) per stream and
/// metrics.json. Labels "uncorrected" and "corrected" give the improvement
/// factor.
nlohmann::json run_report(const fs::path& reference,
                          const std::vector<std::pair<std::string, fs::path>>& streams,
                          const AnalysisOptions& options, const fs::path& out_dir,
                          std::vector<fs::path>* written = nullptr);

struct PipelineResult {
  std::vector<fs::path> outputs;
  nlohmann::json metrics;
  RunManifest manifest;
};
/// simulate -> coincide -> fit -> lut -> apply, a degree-1 variant of
/// fit/lut/apply for the linear comparison, then report. Writes every stage's
/// file plus config.toml and manifest.json into out_dir.
PipelineResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir);

}  // namespace chronocal::app
