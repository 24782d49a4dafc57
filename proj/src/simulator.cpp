#include "chronocal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "chronocal/errors.hpp"
#include "chronocal/rng.hpp"

namespace chronocal {
namespace {

constexpr double kPsPerSecond = 1.0e12;

// Homogeneous Poisson process on [0, duration) via exponential gaps.
std::vector<double> poisson_times(double rate_hz, double duration_s, Rng& rng) {
  std::vector<double> times;
  if (rate_hz <= 0.0) return times;
  const double duration_ps = duration_s * kPsPerSecond;
  const double expected = rate_hz * duration_s;
  times.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
  std::exponential_distribution<double> gap(rate_hz / kPsPerSecond);
  for (double t = gap(rng); t < duration_ps; t += gap(rng)) times.push_back(t);
  return times;
}

struct Candidate {
  double t;
  std::uint32_t pixel;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  return a.t < b.t || (a.t == b.t && a.pixel < b.pixel);
}

// Start time of code c within the frame for one pixel:
// c * bin + bin * (alpha * c + beta * c (c - 1) / 2) + skew.
struct CodeClock {
  double bin;
  double alpha;
  double beta;
  double skew;

  double start(double c) const {
    return bin * (c + alpha * c + beta * c * (c - 1.0) / 2.0) + skew;
  }
};

}  // namespace

std::string_view to_string(ArrivalMode mode) {
  return mode == ArrivalMode::code_tail ? "code_tail" : "uniform";
}

ArrivalMode parse_arrival_mode(std::string_view name) {
  if (name == "uniform") return ArrivalMode::uniform;
  if (name == "code_tail") return ArrivalMode::code_tail;
  throw ConfigError("unknown arrival mode '" + std::string(name) + "'");
}

void SourceConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("source: ") + what);
  };
  require(pair_rate_hz >= 0.0, "pair_rate_hz must be >= 0");
  require(dark_rate_ref_hz >= 0.0 && dark_rate_img_hz >= 0.0, "dark rates must be >= 0");
  require(corr_jitter_ps >= 0.0 && ref_jitter_ps >= 0.0, "jitters must be >= 0");
  require(duration_s > 0.0, "duration_s must be > 0");
  require(ref_efficiency >= 0.0 && ref_efficiency <= 1.0, "ref_efficiency must be in [0, 1]");
  require(img_efficiency >= 0.0 && img_efficiency <= 1.0, "img_efficiency must be in [0, 1]");
  require(ref_dead_time_ps >= 0.0, "ref_dead_time_ps must be >= 0");
  require(tail_knee_code > 0, "tail_knee_code must be > 0");
}

std::vector<PhotonPair> generate_pairs(const SourceConfig& source,
                                       const DetectorGeometry& geometry) {
  source.validate();
  auto rng = substream(source.seed, Stream::pairs);
  const auto signals = poisson_times(source.pair_rate_hz, source.duration_s, rng);

  std::vector<PhotonPair> pairs;
  pairs.reserve(signals.size());
  if (source.corr_jitter_ps > 0.0) {
    std::normal_distribution<double> corr(0.0, source.corr_jitter_ps);
    for (double t : signals) pairs.push_back({t, t + corr(rng)});
  } else {
    for (double t : signals) pairs.push_back({t, t});
  }

  if (source.arrival == ArrivalMode::code_tail) {
    // Keep the frame index, redraw the position within the frame from a
    // truncated exponential; the idler moves with its signal photon.
    auto shape = substream(source.seed, Stream::arrival_shape);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double frame = static_cast<double>(source.frame_period_ps(geometry));
    const double tau = source.tail_knee_code * static_cast<double>(geometry.bin_ps) / 4.0;
    const double mass = -std::expm1(-frame / tau);
    for (auto& p : pairs) {
      const double start = std::floor(p.signal_ps / frame) * frame;
      const double u = -tau * std::log1p(-unit(shape) * mass);
      const double shift = start + std::min(u, std::nextafter(frame, 0.0)) - p.signal_ps;
      p.signal_ps += shift;
      p.idler_ps += shift;
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const PhotonPair& a, const PhotonPair& b) {
      return a.signal_ps < b.signal_ps;
    });
  }
  return pairs;
}

std::vector<ReferenceEvent> detect_reference(std::span<const PhotonPair> pairs,
                                             const SourceConfig& source) {
  source.validate();
  auto rng = substream(source.seed, Stream::reference);
  std::bernoulli_distribution detected(source.ref_efficiency);

  std::vector<double> idlers;
  idlers.reserve(pairs.size());
  for (const auto& p : pairs) idlers.push_back(p.idler_ps);
  std::sort(idlers.begin(), idlers.end());

  std::vector<double> times;
  times.reserve(idlers.size());
  const bool jitter = source.ref_jitter_ps > 0.0;
  std::normal_distribution<double> noise(0.0, jitter ? source.ref_jitter_ps : 1.0);
  for (double t : idlers) {
    if (!detected(rng)) continue;
    times.push_back(jitter ? t + noise(rng) : t);
  }

  auto dark_rng = substream(source.seed, Stream::reference_dark);
  auto darks = poisson_times(source.dark_rate_ref_hz, source.duration_s, dark_rng);
  times.insert(times.end(), darks.begin(), darks.end());
  std::sort(times.begin(), times.end());

  std::vector<ReferenceEvent> events;
  events.reserve(times.size());
  bool have_last = false;
  std::int64_t last = 0;
  for (double t : times) {
    const auto q = std::llround(t);
    if (q < 0) continue;
    if (have_last && source.ref_dead_time_ps > 0.0 &&
        static_cast<double>(q - last) < source.ref_dead_time_ps) {
      continue;
    }
    events.push_back({static_cast<std::uint64_t>(q)});
    last = q;
    have_last = true;
  }
  return events;
}

std::vector<ImagerEvent> detect_imager(std::span<const PhotonPair> pairs,
                                       const DetectorGeometry& geometry, const DriftConfig& drift,
                                       const SourceConfig& source) {
  geometry.validate();
  source.validate();
  drift.validate(geometry);

  const auto n_pixels = static_cast<std::uint32_t>(geometry.pixel_count());
  auto rng = substream(source.seed, Stream::imager);
  std::bernoulli_distribution detected(source.img_efficiency);
  std::uniform_int_distribution<std::uint32_t> pick(0, n_pixels - 1);

  std::vector<Candidate> signal;
  signal.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!detected(rng)) continue;
    signal.push_back({p.signal_ps, pick(rng)});
  }
  if (!std::is_sorted(signal.begin(), signal.end(), candidate_less)) {
    std::sort(signal.begin(), signal.end(), candidate_less);
  }

  std::vector<Candidate> candidates;
  {
    auto dark_rng = substream(source.seed, Stream::imager_dark);
    const auto dark_times = poisson_times(source.dark_rate_img_hz, source.duration_s, dark_rng);
    std::vector<Candidate> darks;
    darks.reserve(dark_times.size());
    for (double t : dark_times) darks.push_back({t, pick(dark_rng)});
    candidates.resize(signal.size() + darks.size());
    std::merge(signal.begin(), signal.end(), darks.begin(), darks.end(), candidates.begin(),
               candidate_less);
  }

  const auto frame = source.frame_period_ps(geometry);
  const double frame_d = static_cast<double>(frame);
  const double bin = geometry.bin_ps;
  const std::uint32_t n_codes = geometry.n_codes;

  std::vector<std::int64_t> last_frame(n_pixels, -1);
  std::vector<ImagerEvent> events;
  events.reserve(candidates.size());

  std::size_t run_end = 0;
  double active_fraction = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    if (cand.t < 0.0) continue;
    const auto w = static_cast<std::int64_t>(std::floor(cand.t / frame_d));
    const double u = cand.t - static_cast<double>(w) * frame_d;

    if (drift.activity_gain != 0.0 && i >= run_end) {
      // Candidates are time-sorted, so one frame is a contiguous run.
      run_end = i;
      while (run_end < candidates.size() &&
             static_cast<std::int64_t>(std::floor(candidates[run_end].t / frame_d)) == w) {
        ++run_end;
      }
      active_fraction = std::min(1.0, static_cast<double>(run_end - i) / n_pixels);
    }

    const auto p = cand.pixel;
    const double alpha =
        drift.alpha[p] * (drift.activity_gain != 0.0 ? 1.0 + drift.activity_gain * active_fraction
                                                     : 1.0);
    const CodeClock clock{bin, alpha, drift.beta[p], drift.skew_ps[p]};
    if (u < clock.start(0) || u >= clock.start(n_codes)) continue;

    std::uint32_t lo = 0;
    std::uint32_t hi = n_codes;  // clock.start(hi) > u
    while (hi - lo > 1) {
      const std::uint32_t mid = lo + (hi - lo) / 2;
      if (clock.start(mid) <= u) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    if (last_frame[p] == w) continue;
    last_frame[p] = w;
    events.push_back({static_cast<std::uint64_t>(w) * frame + static_cast<std::uint64_t>(lo) *
                                                                  geometry.bin_ps,
                      geometry.pixel(p), static_cast<std::uint16_t>(lo)});
  }
  sort_by_time(events);
  return events;
}

SimulationResult simulate(const SimulationConfig& config) {
  config.geometry.validate();
  SimulationResult result;
  result.geometry = config.geometry;
  result.drift = DriftConfig::from_profile(config.geometry, config.drift, config.source.seed);
  const auto pairs = generate_pairs(config.source, config.geometry);
  result.pair_count = pairs.size();
  result.reference = detect_reference(pairs, config.source);
  result.imager = detect_imager(pairs, config.geometry, result.drift, config.source);
  return result;
}

void write_ground_truth_csv(const DetectorGeometry& geometry, const DriftConfig& drift,
                            std::ostream& out) {
  out << "pixel,code,drift_ps\n";
  char buf[64];
  for (std::uint32_t p = 0; p < geometry.pixel_count(); ++p) {
    for (std::uint32_t c = 0; c < geometry.n_codes; ++c) {
      const double d = drift_ground_truth(geometry, drift, geometry.pixel(p), c);
      std::snprintf(buf, sizeof buf, "%u,%u,%.4f\n", p, c, d);
      out << buf;
    }
  }
  if (!out) throw IoError("ground truth csv: write failed");
}

}  // namespace chronocal
