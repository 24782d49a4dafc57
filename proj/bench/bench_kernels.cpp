#include <benchmark/benchmark.h>

#include "chronocal/coincidence.hpp"
#include "chronocal/correction.hpp"
#include "chronocal/histogram.hpp"
#include "chronocal/lut.hpp"
#include "chronocal/pixel_fit.hpp"
#include "chronocal/simulator.hpp"

using namespace chronocal;

namespace {

struct Fixture {
  SimulationResult sim;
  std::vector<CoincidencePair> pairs;
  HistogramSet set;
  std::vector<DriftModel> models;
  CorrectionLut lut;

  Fixture() {
    SimulationConfig cfg;
    cfg.source.pair_rate_hz = 3e6;
    cfg.source.ref_jitter_ps = 150 / kFwhmPerSigma;
    cfg.drift.profile = DriftProfile::center_peaked;
    cfg.drift.beta = 3.8e-4;
    cfg.drift.mismatch = 0.1;
    cfg.drift.skew_spread_ps = 100;
    sim = simulate(cfg);
    pairs = find_coincidences(sim.imager, sim.reference, 25'000);
    set = build_histograms(pairs, sim.geometry, 16, 100, 25'000);
    models = calibrated_models(fit_pixels(set, {}));
    lut = build_lut(models, sim.geometry, choose_reference(models, {}));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

template <bool Parallel>
void BM_BuildHistograms(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto s = Parallel ? build_histograms(f.pairs, f.sim.geometry, 16, 100, 25'000)
                      : serial::build_histograms(f.pairs, f.sim.geometry, 16, 100, 25'000);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.pairs.size()));
}

template <bool Parallel>
void BM_FitPixels(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto r = Parallel ? fit_pixels(f.set, {}) : serial::fit_pixels(f.set, {});
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.set.histograms.size()));
}

template <bool Parallel>
void BM_BuildLut(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto l = Parallel ? build_lut(f.models, f.sim.geometry, f.lut.reference_ps)
                      : serial::build_lut(f.models, f.sim.geometry, f.lut.reference_ps);
    benchmark::DoNotOptimize(l);
  }
}

template <bool Parallel>
void BM_ApplyLut(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto e = Parallel ? apply_lut(f.sim.imager, f.sim.geometry, f.lut)
                      : serial::apply_lut(f.sim.imager, f.sim.geometry, f.lut);
    benchmark::DoNotOptimize(e);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.sim.imager.size()));
}

}  // namespace

BENCHMARK(BM_BuildHistograms<false>)->Name("build_histograms/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildHistograms<true>)->Name("build_histograms/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitPixels<false>)->Name("fit_pixels/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitPixels<true>)->Name("fit_pixels/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildLut<false>)->Name("build_lut/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildLut<true>)->Name("build_lut/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyLut<false>)->Name("apply_lut/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyLut<true>)->Name("apply_lut/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
