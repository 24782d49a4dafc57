#include <doctest.h>

#include <sstream>

#include "chronocal/app/config.hpp"
#include "chronocal/app/manifest.hpp"
#include "chronocal/errors.hpp"
#include "oracles.hpp"

using namespace chronocal;
using namespace chronocal::app;

namespace {

PipelineConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_pipeline_config(in);
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse("");
  CHECK(c.analysis.group_size == 16);
  CHECK(c.analysis.section_ps == 100);
  CHECK(c.analysis.window_ps == 25'000);
  CHECK(c.analysis.min_counts == 100);
  CHECK(c.analysis.poly_degree == 2);
  CHECK(c.analysis.reference.kind == ReferencePolicy::Kind::weighted_mean);
  CHECK(c.simulation.geometry == DetectorGeometry{});
}

TEST_CASE("sections, comments and strings") {
  const auto c = parse(R"(
# demo
[geometry]
rows = 8   # trailing comment
cols = 4

[source]
pair_rate_hz = 2.5e6
ref_jitter_fwhm_ps = 150
arrival = "code_tail"
seed = 99

[drift]
profile = center_peaked
beta = 3e-4

[analysis]
reference_policy = "fixed:12.5"
anchor_code = 8
)");
  CHECK(c.simulation.geometry.rows == 8);
  CHECK(c.simulation.geometry.cols == 4);
  CHECK(c.simulation.source.pair_rate_hz == 2.5e6);
  CHECK(c.simulation.source.ref_jitter_ps == doctest::Approx(150 / kFwhmPerSigma));
  CHECK(c.simulation.source.arrival == ArrivalMode::code_tail);
  CHECK(c.simulation.source.seed == 99);
  CHECK(c.simulation.drift.profile == DriftProfile::center_peaked);
  CHECK(c.simulation.drift.beta == 3e-4);
  CHECK(c.analysis.reference.kind == ReferencePolicy::Kind::fixed);
  CHECK(c.analysis.reference.fixed_ps == 12.5);
  CHECK(c.analysis.reference.anchor_code == 8);
}

TEST_CASE("malformed input is a config error") {
  CHECK_THROWS_AS(parse("[nope]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\nseed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\nseed = seven\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\nseed\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\narrival = \"uniform\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source]\nref_jitter_ps = 60\nref_jitter_fwhm_ps = 150\n"), ConfigError);
  CHECK_THROWS_AS(parse("[drift]\nprofile = spiral\n"), ConfigError);
  CHECK_THROWS_AS(parse("[analysis]\nreference_policy = mode\n"), ConfigError);
  CHECK_THROWS_AS(parse("[analysis]\ngroup_size = 1.5\n"), ConfigError);
}

TEST_CASE("effective config round trips through toml") {
  PipelineConfig c;
  c.simulation.geometry = {16, 8, 128, 250};
  c.simulation.source.pair_rate_hz = 1.234567e6;
  c.simulation.source.ref_jitter_ps = 63.7;
  c.simulation.source.seed = 18'446'744'073'709'551'557ULL;
  c.simulation.source.arrival = ArrivalMode::code_tail;
  c.simulation.drift.profile = DriftProfile::tree;
  c.simulation.drift.alpha = 0.1 / 3;
  c.analysis.group_size = 8;
  c.analysis.reference = ReferencePolicy::parse("median");
  c.analysis.reference.anchor_code = 3;
  c.analysis.full_width_fraction = 0.1;
  const auto text = to_toml(c);
  const auto back = parse(text);
  CHECK(to_toml(back) == text);
  CHECK(back.simulation.source.seed == c.simulation.source.seed);
  CHECK(back.simulation.drift.alpha == c.simulation.drift.alpha);
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("missing config file is an io error") {
  CHECK_THROWS_AS(load_pipeline_config("/nonexistent/x.toml"), IoError);
}

TEST_CASE("sha256") {
  const std::string abc = "abc";
  CHECK(sha256_hex({reinterpret_cast<const unsigned char*>(abc.data()), abc.size()}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = oracle::scratch_dir("sha");
  {
    std::ofstream f(dir / "x.txt", std::ios::binary);
    f << "abc";
  }
  CHECK(sha256_file(dir / "x.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto d = digest_files({dir / "x.txt"}, dir);
  REQUIRE(d.size() == 1);
  CHECK(d[0].path == "x.txt");
}
