#include <doctest.h>

#include <cmath>
#include <random>

#include "chronocal/correction.hpp"
#include "chronocal/errors.hpp"
#include "chronocal/pixel_fit.hpp"
#include "chronocal/simulator.hpp"
#include "oracles.hpp"

using namespace chronocal;

namespace {

struct Calibrated {
  SimulationResult sim;
  CorrectionLut lut;
  std::vector<ImagerEvent> corrected;
};

CoincidenceHistogram aggregate_peak(const std::vector<ImagerEvent>& img,
                                    const std::vector<ReferenceEvent>& ref,
                                    const DetectorGeometry& g) {
  const auto pairs = find_coincidences(img, ref, 25'000);
  return aggregate(build_histograms(pairs, g, g.n_codes, 100, 25'000));
}

CorrectionLut calibrate(const std::vector<ImagerEvent>& img, const std::vector<ReferenceEvent>& ref,
                        const DetectorGeometry& g) {
  const auto pairs = find_coincidences(img, ref, 25'000);
  const auto set = build_histograms(pairs, g, 16, 100, 25'000);
  const auto models = calibrated_models(fit_pixels(set, {}));
  return build_lut(models, g, choose_reference(models, {}));
}

SimulationConfig small_run(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.geometry = {8, 8, 256, 210};
  cfg.source.pair_rate_hz = 1.5e6;
  cfg.source.seed = seed;
  cfg.drift.profile = DriftProfile::center_peaked;
  cfg.drift.beta = 3e-4;
  cfg.drift.mismatch = 0.1;
  cfg.drift.skew_ps = 300;
  cfg.drift.skew_spread_ps = 100;
  return cfg;
}

Calibrated run(std::uint64_t seed) {
  Calibrated c;
  c.sim = simulate(small_run(seed));
  c.lut = calibrate(c.sim.imager, c.sim.reference, c.sim.geometry);
  c.corrected = apply_lut(c.sim.imager, c.sim.geometry, c.lut);
  return c;
}

}  // namespace

TEST_CASE("zero lut is the identity") {
  std::mt19937_64 rng(1);
  const DetectorGeometry g{8, 8, 256, 210};
  const auto ev = oracle::random_imager(rng, 5000, g, 1ULL << 32);
  CHECK(apply_lut(ev, g, CorrectionLut::zero(g)) == ev);
  CHECK(serial::apply_lut(ev, g, CorrectionLut::zero(g)) == ev);
}

TEST_CASE("single event offset") {
  const DetectorGeometry g{2, 2, 16, 210};
  auto lut = CorrectionLut::zero(g);
  lut.offsets[g.linear({1, 0}) * 16 + 5] = 300;
  lut.offsets[g.linear({0, 1}) * 16 + 2] = -1000;
  const std::vector<ImagerEvent> ev{{500, {0, 1}, 2}, {1000, {1, 0}, 5}};
  const auto out = apply_lut(ev, g, lut);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == ImagerEvent{0, {0, 1}, 2});
  CHECK(out[1] == ImagerEvent{1300, {1, 0}, 5});
}

TEST_CASE("corrections reorder events") {
  const DetectorGeometry g{1, 2, 4, 210};
  auto lut = CorrectionLut::zero(g);
  lut.offsets[0 * 4 + 1] = 1000;
  const std::vector<ImagerEvent> ev{{100, {0, 0}, 1}, {200, {0, 1}, 1}};
  const auto out = apply_lut(ev, g, lut);
  CHECK(out[0].pixel == PixelId{0, 1});
  CHECK(out[1].time_ps == 1100);
}

TEST_CASE("geometry mismatch fails before any work") {
  const DetectorGeometry g{2, 2, 16, 210};
  const auto lut = CorrectionLut::zero(g);
  const std::vector<ImagerEvent> ev{{5, {0, 0}, 1}};
  CHECK_THROWS_AS(apply_lut(ev, DetectorGeometry{2, 2, 32, 210}, lut), GeometryError);
  const std::vector<ImagerEvent> outside{{5, {0, 0}, 1}, {6, {0, 0}, 16}};
  CHECK_THROWS_AS(apply_lut(outside, g, lut), GeometryError);
  CHECK_THROWS_AS(serial::apply_lut(outside, g, lut), GeometryError);
}

TEST_CASE("parallel correction equals serial and conserves events") {
  std::mt19937_64 rng(4);
  const DetectorGeometry g{};
  auto lut = CorrectionLut::zero(g);
  std::uniform_int_distribution<std::int32_t> off(-3000, 3000);
  for (auto& o : lut.offsets) o = off(rng);
  const auto ev = oracle::random_imager(rng, 50'000, g, 1ULL << 30);
  const auto a = apply_lut(ev, g, lut);
  const auto b = serial::apply_lut(ev, g, lut);
  CHECK(a == b);
  CHECK(a.size() == ev.size());
  for (std::size_t i = 1; i < a.size(); ++i) REQUIRE_FALSE(event_less(a[i], a[i - 1]));
}

TEST_CASE("peak metrics of a Gaussian") {
  const auto h = oracle::gaussian_histogram(10'000, 40, 300, 0, 100, -25'000, 500);
  const auto m = peak_metrics(h);
  CHECK(std::abs(m.fwhm_ps - 706.4) <= 100);
  // 5% level: 2 sqrt(2 ln 20) sigma
  CHECK(std::abs(m.full_width_ps - 2 * std::sqrt(2 * std::log(20.0)) * 300) <= 100);
  CHECK(m.baseline == 0);
  CHECK(m.peak_ps == 50);
  CHECK(m.total_counts == h.total);
}

TEST_CASE("single nonzero section") {
  CoincidenceHistogram h;
  h.section_ps = 100;
  h.origin_ps = -5000;
  h.counts.assign(100, 0);
  h.counts[50] = 1000;
  const auto m = peak_metrics(h);
  CHECK(m.fwhm_ps == doctest::Approx(100));
  // interpolation between section centers at the 5% level
  CHECK(m.full_width_ps == doctest::Approx(190));
}

TEST_CASE("baseline comes from the outer sections") {
  auto h = oracle::gaussian_histogram(5000, 0, 200, 400, 100, -5000, 100);
  const auto m = peak_metrics(h);
  CHECK(m.baseline == doctest::Approx(400));
  CHECK(std::abs(m.fwhm_ps - 2.3548 * 200) <= 100);
}

TEST_CASE("flat histogram has no peak") {
  CoincidenceHistogram h;
  h.counts.assign(100, 500);
  h.counts[40] = 600;
  CHECK_THROWS_AS(peak_metrics(h), NoPeak);
  h.counts.clear();
  CHECK_THROWS_AS(peak_metrics(h), NoPeak);
}

TEST_CASE("end to end on a small array") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = run(seed);
    const auto& g = c.sim.geometry;
    CHECK(c.corrected.size() == c.sim.imager.size());
    const auto before = peak_metrics(aggregate_peak(c.sim.imager, c.sim.reference, g));
    const auto after = peak_metrics(aggregate_peak(c.corrected, c.sim.reference, g));
    CHECK(after.fwhm_ps <= before.fwhm_ps);
    CHECK(after.full_width_ps < before.full_width_ps);

    // corrected peak centers on the reference
    CHECK(std::abs(after.peak_ps - c.lut.reference_ps) <= 100);

    // quantization-limited width: one code bin, the reference jitter and one section
    const double sigma = std::hypot(small_run(seed).source.ref_jitter_ps, small_run(seed).source.corr_jitter_ps);
    const double ideal = oracle::ideal_fwhm(g.bin_ps, 100, sigma);
    CHECK(after.fwhm_ps <= 1.2 * ideal);

    // offsets span the drift: max |offset - mean offset| vs the ground truth range
    double max_drift = 0, max_off = 0;
    for (std::uint32_t p = 0; p < g.pixel_count(); ++p) {
      for (std::uint32_t code = 0; code < g.n_codes; ++code) {
        max_drift = std::max(max_drift, drift_ground_truth(g, c.sim.drift, g.pixel(p), code) -
                                            drift_ground_truth(g, c.sim.drift, g.pixel(p), 0));
        max_off = std::max(max_off, static_cast<double>(c.lut.offsets[p * g.n_codes + code] -
                                                        c.lut.offsets[p * g.n_codes]));
      }
    }
    CHECK(std::abs(max_off - max_drift) <= 0.1 * max_drift + 100);

    if (seed == 1) {
      // a second calibration pass on corrected data finds almost nothing left
      const auto again = calibrate(c.corrected, c.sim.reference, g);
      double ss = 0;
      std::size_t n = 0;
      for (std::uint32_t p = 0; p < g.pixel_count(); ++p) {
        if (!again.pixels[p].calibrated) continue;
        for (std::uint32_t code = 0; code <= again.pixels[p].model.valid_code_max; ++code) {
          const double o = again.offsets[p * g.n_codes + code];
          ss += o * o;
          ++n;
        }
      }
      REQUIRE(n > 0);
      CHECK(std::sqrt(ss / n) <= 30);
    }
  }
}
