#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "chronocal/drift_model.hpp"
#include "chronocal/errors.hpp"
#include "chronocal/simulator.hpp"
#include "oracles.hpp"

using namespace chronocal;

namespace {

SourceConfig quiet_source() {
  SourceConfig s;
  s.ref_jitter_ps = 0;
  s.corr_jitter_ps = 0;
  return s;
}

double sample_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

// One pair per frame at a uniformly random position within the frame.
std::vector<PhotonPair> one_pair_per_frame(std::size_t n, double frame, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, frame);
  std::vector<PhotonPair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * frame + pos(rng);
    pairs[i] = {t, t};
  }
  return pairs;
}

DriftConfig single_pixel_drift(double alpha, double beta, double skew) {
  DriftConfig d = DriftConfig::zero(DetectorGeometry{1, 1, 256, 210});
  d.alpha[0] = alpha;
  d.beta[0] = beta;
  d.skew_ps[0] = skew;
  return d;
}

}  // namespace

TEST_CASE("zero pair rate gives no pairs") {
  SourceConfig s;
  s.pair_rate_hz = 0;
  CHECK(generate_pairs(s, DetectorGeometry{}).empty());
}

TEST_CASE("pair count follows Poisson statistics") {
  SourceConfig s;
  s.pair_rate_hz = 1e5;
  s.duration_s = 1;
  s.seed = 42;
  const auto pairs = generate_pairs(s, DetectorGeometry{});
  CHECK(std::abs(static_cast<double>(pairs.size()) - 1e5) <= 5 * std::sqrt(1e5));
  for (std::size_t i = 1; i < pairs.size(); ++i) REQUIRE(pairs[i - 1].signal_ps <= pairs[i].signal_ps);
  CHECK(pairs.back().signal_ps < 1e12);
}

TEST_CASE("idler jitter matches corr_jitter_ps") {
  SourceConfig s;
  s.pair_rate_hz = 2e4;
  s.corr_jitter_ps = 10;
  s.seed = 5;
  const auto pairs = generate_pairs(s, DetectorGeometry{});
  REQUIRE(pairs.size() >= 10'000);
  std::vector<double> d;
  for (const auto& p : pairs) d.push_back(p.idler_ps - p.signal_ps);
  CHECK(std::abs(sample_std(d) - 10.0) <= 0.5);
}

TEST_CASE("ideal reference detector reproduces idler arrivals") {
  auto s = quiet_source();
  s.pair_rate_hz = 1e4;
  s.seed = 2;
  const auto pairs = generate_pairs(s, DetectorGeometry{});
  const auto ref = detect_reference(pairs, s);
  REQUIRE(ref.size() == pairs.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    REQUIRE(ref[i].time_ps == static_cast<std::uint64_t>(std::llround(pairs[i].idler_ps)));
  }
}

TEST_CASE("zero efficiency reference sees nothing") {
  auto s = quiet_source();
  s.ref_efficiency = 0;
  s.pair_rate_hz = 1e4;
  CHECK(detect_reference(generate_pairs(s, DetectorGeometry{}), s).empty());
}

TEST_CASE("reference jitter has the configured std") {
  auto s = quiet_source();
  s.pair_rate_hz = 1.5e4;
  s.ref_jitter_ps = 150;
  s.seed = 77;
  const auto pairs = generate_pairs(s, DetectorGeometry{});
  const auto ref = detect_reference(pairs, s);
  REQUIRE(ref.size() == pairs.size());
  REQUIRE(ref.size() >= 10'000);
  std::vector<double> d;
  for (std::size_t i = 0; i < ref.size(); ++i) d.push_back(ref[i].time_ps - pairs[i].idler_ps);
  CHECK(std::abs(sample_std(d) - 150.0) <= 7.5);
}

TEST_CASE("reference dark counts and dead time") {
  auto s = quiet_source();
  s.pair_rate_hz = 0;
  s.dark_rate_ref_hz = 1e5;
  s.seed = 4;
  const auto darks = detect_reference({}, s);
  CHECK(std::abs(static_cast<double>(darks.size()) - 1e5) <= 5 * std::sqrt(1e5));
  s.ref_dead_time_ps = 5e6;
  const auto dead = detect_reference({}, s);
  CHECK(dead.size() < darks.size());
  for (std::size_t i = 1; i < dead.size(); ++i) REQUIRE(dead[i].time_ps - dead[i - 1].time_ps >= 5'000'000);
}

TEST_CASE("ground truth drift") {
  const DetectorGeometry g{};
  auto d = DriftConfig::zero(g);
  for (std::uint32_t c = 0; c < g.n_codes; c += 17) CHECK(drift_ground_truth(g, d, {3, 4}, c) == 0.0);

  d.alpha[g.linear({1, 2})] = 0.01;
  CHECK(drift_ground_truth(g, d, {1, 2}, 100) == doctest::Approx(210.0).epsilon(1e-12));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-0.02, 0.02), b(-3e-4, 3e-4), k(-500, 500);
  for (int i = 0; i < 50; ++i) {
    const PixelId p{static_cast<std::uint32_t>(rng() % 32), static_cast<std::uint32_t>(rng() % 32)};
    const auto lin = g.linear(p);
    d.alpha[lin] = a(rng);
    d.beta[lin] = b(rng);
    d.skew_ps[lin] = k(rng);
    const double want = oracle::cumulative_drift(g.bin_ps, d.alpha[lin], d.beta[lin], d.skew_ps[lin], 255);
    CHECK(drift_ground_truth(g, d, p, 255) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(drift_ground_truth(g, d, {0, 0}, 256), RangeError);
}

TEST_CASE("arrival at frame start with zero drift") {
  const DetectorGeometry g{1, 1, 256, 210};
  auto s = quiet_source();
  const double frame = 256.0 * 210;
  const std::vector<PhotonPair> pairs{{5 * frame, 5 * frame}};
  const auto ev = detect_imager(pairs, g, DriftConfig::zero(g), s);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].tdc_code == 0);
  CHECK(ev[0].time_ps == static_cast<std::uint64_t>(5 * frame));
}

TEST_CASE("zero drift leaves only quantization error") {
  const DetectorGeometry g{1, 1, 256, 210};
  auto s = quiet_source();
  const auto pairs = one_pair_per_frame(20'000, 256.0 * 210, 9);
  const auto ev = detect_imager(pairs, g, DriftConfig::zero(g), s);
  REQUIRE(ev.size() == pairs.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    REQUIRE(std::abs(static_cast<double>(ev[i].time_ps) - pairs[i].signal_ps) <= 210.0);
  }
}

TEST_CASE("conditional mean error follows the drift") {
  const DetectorGeometry g{1, 1, 256, 210};
  auto s = quiet_source();
  s.frame_ps = 80'000;
  const auto drift = single_pixel_drift(0.02, 2e-4, 120.0);
  const auto pairs = one_pair_per_frame(400'000, 80'000.0, 10);
  const auto ev = detect_imager(pairs, g, drift, s);
  // codes span about 56 ns of the 80 ns frame
  REQUIRE(ev.size() > 250'000);

  // Events and pairs are matched by frame index.
  std::vector<double> sum(256), sum2(256), n(256);
  std::vector<double> xs, ys, ws;
  for (const auto& e : ev) {
    const auto w = e.time_ps / 80'000;
    const double err = static_cast<double>(e.time_ps) - pairs[w].signal_ps;
    sum[e.tdc_code] += err;
    sum2[e.tdc_code] += err * err;
    n[e.tdc_code] += 1;
    xs.push_back(e.tdc_code);
    ys.push_back(err);
    ws.push_back(1.0);
  }
  int checked = 0;
  for (std::uint32_t c = 0; c < 256; ++c) {
    if (n[c] < 1000) continue;
    const double mean = sum[c] / n[c];
    const double var = sum2[c] / n[c] - mean * mean;
    const double se = std::sqrt(var / n[c]);
    const double d = drift_ground_truth(g, drift, {0, 0}, c);
    const double period = 210 * (1 + 0.02 + 2e-4 * c);
    CHECK(std::abs(mean + d + period / 2) <= 3.5 * se + 1.0);
    ++checked;
  }
  CHECK(checked > 200);

  // err = -(skew + bin (1 + alpha) / 2 + bin alpha c + bin beta c^2 / 2) + noise
  const auto coef = weighted_polyfit(xs, ys, ws, 2);
  CHECK(coef[2] == doctest::Approx(-210 * 2e-4 / 2).epsilon(0.03));
  CHECK(coef[1] == doctest::Approx(-210 * 0.02).epsilon(0.03));
  CHECK(coef[0] == doctest::Approx(-(120 + 210 * 1.02 / 2)).epsilon(0.03));
}

TEST_CASE("first photon per pixel per frame wins") {
  const DetectorGeometry g{1, 1, 256, 210};
  auto s = quiet_source();
  const double frame = 256.0 * 210;
  const std::vector<PhotonPair> pairs{{1000, 1000}, {2000, 2000}, {frame + 10, frame + 10}};
  const auto ev = detect_imager(pairs, g, DriftConfig::zero(g), s);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].tdc_code == 1000 / 210);
  CHECK(ev[1].tdc_code == 0);
}

TEST_CASE("uniform arrivals fill codes uniformly") {
  const DetectorGeometry g{1, 1, 256, 210};
  const auto pairs = one_pair_per_frame(256'000, 256.0 * 210, 12);
  const auto ev = detect_imager(pairs, g, DriftConfig::zero(g), quiet_source());
  std::vector<double> hist(256);
  for (const auto& e : ev) hist[e.tdc_code] += 1;
  const double expect = ev.size() / 256.0;
  double chi2 = 0;
  for (double h : hist) chi2 += (h - expect) * (h - expect) / expect;
  // 255 degrees of freedom
  CHECK(chi2 < 255 + 5 * std::sqrt(2 * 255.0));
}

TEST_CASE("code_tail arrivals rarely reach the knee") {
  SimulationConfig cfg;
  cfg.geometry = {8, 8, 256, 210};
  cfg.source.arrival = ArrivalMode::code_tail;
  cfg.source.pair_rate_hz = 2e5;
  cfg.source.seed = 3;
  const auto sim = simulate(cfg);
  REQUIRE(sim.imager.size() > 100'000);
  std::size_t high = 0, low = 0;
  for (const auto& e : sim.imager) {
    high += e.tdc_code > 200;
    low += e.tdc_code < 50;
  }
  const double frac = static_cast<double>(high) / sim.imager.size();
  CHECK(frac < 0.03);
  CHECK(frac > 0.0);
  CHECK(static_cast<double>(low) / sim.imager.size() > 0.5);
}

TEST_CASE("simulation is deterministic in the seed") {
  SimulationConfig cfg;
  cfg.geometry = {8, 8, 256, 210};
  cfg.source.pair_rate_hz = 1e5;
  cfg.source.dark_rate_img_hz = 1e4;
  cfg.source.dark_rate_ref_hz = 1e4;
  cfg.drift.profile = DriftProfile::center_peaked;
  cfg.drift.beta = 3e-4;
  cfg.drift.mismatch = 0.1;
  cfg.drift.skew_spread_ps = 50;
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  CHECK(a.imager == b.imager);
  CHECK(a.reference == b.reference);
  CHECK(a.drift.beta == b.drift.beta);
  cfg.source.seed = 2;
  const auto c = simulate(cfg);
  CHECK(c.imager != a.imager);
}

TEST_CASE("drift profiles") {
  const DetectorGeometry g{};
  DriftMagnitudes m;
  m.profile = DriftProfile::center_peaked;
  m.alpha = 0.01;
  m.beta = 2e-4;
  auto d = DriftConfig::from_profile(g, m, 1);
  CHECK(d.beta[g.linear({16, 16})] > d.beta[g.linear({0, 0})]);
  CHECK(d.beta[g.linear({0, 0})] == doctest::Approx(2e-4 * m.edge_ratio).epsilon(0.05));

  m = {};
  m.profile = DriftProfile::row_gradient;
  m.skew_ps = 400;
  d = DriftConfig::from_profile(g, m, 1);
  CHECK(d.skew_ps[g.linear({0, 0})] == 0.0);
  CHECK(d.skew_ps[g.linear({31, 31})] == doctest::Approx(400));

  m.profile = DriftProfile::tree;
  d = DriftConfig::from_profile(g, m, 1);
  CHECK(d.skew_ps[g.linear({5, 31})] == doctest::Approx(400));
  CHECK(d.skew_ps[g.linear({5, 0})] == 0.0);

  m = {};
  m.beta = -0.01;
  CHECK_THROWS_AS(DriftConfig::from_profile(g, m, 1).validate(g), ConfigError);
  CHECK(to_string(parse_drift_profile("tree")) == "tree");
  CHECK_THROWS_AS(parse_drift_profile("spiral"), ConfigError);
}

TEST_CASE("source validation") {
  SourceConfig s;
  s.ref_efficiency = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.duration_s = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.pair_rate_hz = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}
