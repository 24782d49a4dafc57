#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "chronocal/drift_profile.hpp"
#include "chronocal/events.hpp"
#include "chronocal/geometry.hpp"

namespace chronocal {

/// How pair arrivals are positioned inside the imager's observation frame.
///  - uniform:   CW-like, every reachable code sampled evenly
///  - code_tail: truncated exponential from the frame start, so codes past
///               the knee are rarely hit
enum class ArrivalMode { uniform, code_tail };

std::string_view to_string(ArrivalMode mode);
ArrivalMode parse_arrival_mode(std::string_view name);

/// 2.3548...; converts a Gaussian FWHM into its standard deviation.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

struct SourceConfig {
  double pair_rate_hz = 1.0e6;
  /// Std of the idler - signal arrival difference.
  double corr_jitter_ps = 1.0;
  /// Std of the reference detector's timing jitter. The default is a
  /// 150 ps FWHM detector.
  double ref_jitter_ps = 150.0 / kFwhmPerSigma;
  double dark_rate_ref_hz = 0.0;
  /// Imager background rate summed over the whole array.
  double dark_rate_img_hz = 0.0;
  double duration_s = 1.0;
  std::uint64_t seed = 1;

  double ref_efficiency = 1.0;
  double img_efficiency = 1.0;
  double ref_dead_time_ps = 0.0;

  /// Observation frame period; 0 means n_codes * bin_ps (back-to-back frames).
  std::uint64_t frame_ps = 0;
  ArrivalMode arrival = ArrivalMode::uniform;
  /// code_tail: decay length is knee / 4 codes, so about 2% of arrivals land
  /// past the knee.
  std::uint32_t tail_knee_code = 200;

  /// Throws ConfigError on negative rates/jitters, non-positive duration or
  /// efficiencies outside [0, 1].
  void validate() const;
  std::uint64_t frame_period_ps(const DetectorGeometry& geometry) const {
    return frame_ps != 0 ? frame_ps
                         : static_cast<std::uint64_t>(geometry.n_codes) * geometry.bin_ps;
  }
};

struct PhotonPair {
  double signal_ps = 0.0;
  double idler_ps = 0.0;
};

/// Poisson process of pair_rate_hz over duration_s, idler = signal +
/// N(0, corr_jitter_ps). Sorted by signal arrival; deterministic in the seed.
std::vector<PhotonPair> generate_pairs(const SourceConfig& source,
                                       const DetectorGeometry& geometry);

/// Reference detector: efficiency, Gaussian jitter, dark counts, optional
/// dead time. Output is time-sorted and quantized to 1 ps.
std::vector<ReferenceEvent> detect_reference(std::span<const PhotonPair> pairs,
                                             const SourceConfig& source);

/// Drift-afflicted imager under flood illumination. Each detected signal
/// photon lands on a uniformly random pixel; the code is the last one whose
/// drifted start time precedes the arrival within the frame, and the reported
/// time is frame_start + code * bin_ps. First photon per pixel per frame wins.
std::vector<ImagerEvent> detect_imager(std::span<const PhotonPair> pairs,
                                       const DetectorGeometry& geometry, const DriftConfig& drift,
                                       const SourceConfig& source);

struct SimulationConfig {
  DetectorGeometry geometry;
  SourceConfig source;
  DriftMagnitudes drift;
};

struct SimulationResult {
  DetectorGeometry geometry;
  DriftConfig drift;
  std::vector<ReferenceEvent> reference;
  std::vector<ImagerEvent> imager;
  std::size_t pair_count = 0;
};

SimulationResult simulate(const SimulationConfig& config);

/// Ground-truth drift table as CSV: pixel,code,drift_ps (pixel = linear index).
void write_ground_truth_csv(const DetectorGeometry& geometry, const DriftConfig& drift,
                            std::ostream& out);

}  // namespace chronocal
