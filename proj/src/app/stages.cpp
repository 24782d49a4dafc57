#include "chronocal/app/stages.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "chronocal/coincidence.hpp"
#include "chronocal/correction.hpp"
#include "chronocal/errors.hpp"
#include "chronocal/event_io.hpp"
#include "chronocal/lut.hpp"
#include "chronocal/simulator.hpp"
#include "chronocal/threads.hpp"

namespace chronocal::app {
namespace {

using nlohmann::json;

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file: " + p.string());
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  return out;
}

EventFile load_kind(const fs::path& p, RecordType expected) {
  require_file(p);
  auto file = load_events(p);
  if (file.type != expected) {
    throw FormatError(p.string() + ": expected " +
                      (expected == RecordType::imager ? "imager" : "reference") + " events");
  }
  return file;
}

json metrics_json(const PeakMetrics& m) {
  return {{"fwhm_ps", m.fwhm_ps},
          {"full_width_ps", m.full_width_ps},
          {"peak_ps", m.peak_ps},
          {"baseline", m.baseline},
          {"total_counts", m.total_counts}};
}

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <class F>
  auto operator()(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, t0);
    } else {
      auto r = f();
      record(name, t0);
      return r;
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    sink_[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
  }
  std::map<std::string, double>& sink_;
};

}  // namespace

SimulateArtifacts run_simulate(const PipelineConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto sim = simulate(config.simulation);
  SimulateArtifacts a;
  a.reference = out_dir / "reference.ptev";
  a.imager = out_dir / "imager.ptev";
  a.ground_truth = out_dir / "ground_truth.csv";
  a.pair_count = sim.pair_count;
  save_events(a.reference, std::span<const ReferenceEvent>(sim.reference), sim.geometry);
  save_events(a.imager, std::span<const ImagerEvent>(sim.imager), sim.geometry);
  auto gt = open_out(a.ground_truth);
  write_ground_truth_csv(sim.geometry, sim.drift, gt);
  return a;
}

HistogramSet coincide_files(std::span<const fs::path> imager, std::span<const fs::path> references,
                            const AnalysisOptions& options) {
  if (imager.empty()) throw ConfigError("coincide: no imager files given");
  if (references.size() != 1 && references.size() != imager.size()) {
    throw ConfigError("coincide: give one reference file, or one per imager file");
  }
  HistogramSet merged;
  bool have = false;
  EventFile shared_ref;
  if (references.size() == 1) shared_ref = load_kind(references[0], RecordType::reference);
  for (std::size_t i = 0; i < imager.size(); ++i) {
    const auto img = load_kind(imager[i], RecordType::imager);
    EventFile own_ref;
    if (references.size() != 1) own_ref = load_kind(references[i], RecordType::reference);
    const auto& ref = references.size() == 1 ? shared_ref : own_ref;
    const auto pairs = find_coincidences(img.imager, ref.reference, options.window_ps);
    auto set = build_histograms(pairs, img.geometry, options.group_size, options.section_ps,
                                options.window_ps);
    if (!have) {
      merged = std::move(set);
      have = true;
    } else {
      merged = merge_histograms(merged, set);
    }
  }
  return merged;
}

fs::path run_coincide(std::span<const fs::path> imager, std::span<const fs::path> references,
                      const AnalysisOptions& options, const fs::path& out_dir) {
  const auto set = coincide_files(imager, references, options);
  fs::create_directories(out_dir);
  const auto path = out_dir / "histograms.csv";
  auto out = open_out(path);
  write_histograms_csv(set, out);
  return path;
}

void write_fit_diagnostics_csv(const std::vector<PixelCalibration>& pixels,
                               const DetectorGeometry& geometry, std::ostream& out) {
  out << "pixel,group,mu_ps,sigma_ps,counts,converged\n";
  char buf[160];
  for (const auto& p : pixels) {
    for (std::size_t g = 0; g < p.group_fits.size(); ++g) {
      const auto& f = p.group_fits[g];
      std::snprintf(buf, sizeof buf, "%u,%zu,%.6f,%.6f,%llu,%d\n", geometry.linear(p.pixel), g,
                    f.mean_ps, f.sigma_ps, static_cast<unsigned long long>(f.total_counts),
                    f.converged ? 1 : 0);
      out << buf;
    }
  }
  if (!out) throw IoError("fit diagnostics: write failed");
}

void write_drift_models(const fs::path& path, const DriftModelFile& file) {
  json doc;
  doc["format"] = "chronocal-drift-models";
  doc["version"] = 1;
  doc["geometry"] = {{"rows", file.geometry.rows},
                     {"cols", file.geometry.cols},
                     {"n_codes", file.geometry.n_codes},
                     {"bin_ps", file.geometry.bin_ps}};
  doc["group_size"] = file.group_size;
  doc["degree"] = file.degree;
  doc["min_counts"] = file.min_counts;
  json models = json::array();
  for (const auto& m : file.models) {
    models.push_back({{"pixel", file.geometry.linear(m.pixel)},
                      {"coeffs", {m.coeffs[0], m.coeffs[1], m.coeffs[2]}},
                      {"degree", m.degree},
                      {"valid_code_max", m.valid_code_max},
                      {"n_groups_used", m.n_groups_used},
                      {"total_counts", m.total_counts}});
  }
  doc["models"] = std::move(models);
  json failed = json::array();
  for (const auto& [pixel, reason] : file.failed) {
    failed.push_back({{"pixel", pixel}, {"reason", reason}});
  }
  doc["failed"] = std::move(failed);
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("drift models: write failed");
}

DriftModelFile read_drift_models(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  try {
    const auto doc = json::parse(in);
    if (doc.at("format") != "chronocal-drift-models") {
      throw FormatError(path.string() + ": not a drift model file");
    }
    DriftModelFile f;
    f.geometry.rows = doc.at("geometry").at("rows").get<std::uint32_t>();
    f.geometry.cols = doc.at("geometry").at("cols").get<std::uint32_t>();
    f.geometry.n_codes = doc.at("geometry").at("n_codes").get<std::uint32_t>();
    f.geometry.bin_ps = doc.at("geometry").at("bin_ps").get<std::uint32_t>();
    f.geometry.validate();
    f.group_size = doc.at("group_size").get<std::uint32_t>();
    f.degree = doc.at("degree").get<int>();
    f.min_counts = doc.at("min_counts").get<std::uint64_t>();
    for (const auto& jm : doc.at("models")) {
      DriftModel m;
      const auto p = jm.at("pixel").get<std::uint32_t>();
      if (p >= f.geometry.pixel_count()) throw FormatError(path.string() + ": pixel out of range");
      m.pixel = f.geometry.pixel(p);
      for (std::size_t k = 0; k < 3; ++k) m.coeffs[k] = jm.at("coeffs").at(k).get<double>();
      m.degree = jm.at("degree").get<int>();
      m.valid_code_max = jm.at("valid_code_max").get<std::uint32_t>();
      m.n_groups_used = jm.at("n_groups_used").get<int>();
      m.total_counts = jm.at("total_counts").get<std::uint64_t>();
      f.models.push_back(m);
    }
    for (const auto& jf : doc.at("failed")) {
      f.failed.emplace_back(jf.at("pixel").get<std::uint32_t>(), jf.at("reason").get<std::string>());
    }
    return f;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FitArtifacts run_fit(const fs::path& histograms_csv, const AnalysisOptions& options,
                     const fs::path& out_dir, const std::string& suffix) {
  require_file(histograms_csv);
  std::ifstream in(histograms_csv);
  auto set = read_histograms_csv(in);
  if (options.group_size != set.layout.group_size) set = regroup(set, options.group_size);

  DriftFitOptions fit_opts;
  fit_opts.group_size = set.layout.group_size;
  fit_opts.min_counts = options.min_counts;
  fit_opts.degree = options.poly_degree;
  const auto pixels = fit_pixels(set, fit_opts);

  fs::create_directories(out_dir);
  FitArtifacts a;
  a.diagnostics = out_dir / ("fit_diagnostics" + suffix + ".csv");
  a.models = out_dir / ("drift_models" + suffix + ".json");
  {
    auto out = open_out(a.diagnostics);
    write_fit_diagnostics_csv(pixels, set.geometry, out);
  }
  DriftModelFile file;
  file.geometry = set.geometry;
  file.group_size = set.layout.group_size;
  file.degree = options.poly_degree;
  file.min_counts = options.min_counts;
  for (const auto& p : pixels) {
    if (p.model) {
      file.models.push_back(*p.model);
    } else {
      file.failed.emplace_back(set.geometry.linear(p.pixel), p.failure);
    }
  }
  a.calibrated = file.models.size();
  a.failed = file.failed.size();
  write_drift_models(a.models, file);
  return a;
}

fs::path run_lut(const fs::path& models_json, const AnalysisOptions& options,
                 const fs::path& out_json) {
  const auto file = read_drift_models(models_json);
  const double reference = choose_reference(file.models, options.reference);
  const auto lut = build_lut(file.models, file.geometry, reference, options.reference);
  if (out_json.has_parent_path()) fs::create_directories(out_json.parent_path());
  save_lut(out_json, lut);
  return out_json;
}

fs::path run_apply(const fs::path& imager, const fs::path& lut_json, const fs::path& out_file) {
  require_file(lut_json);
  const auto lut = load_lut(lut_json);
  const auto events = load_kind(imager, RecordType::imager);
  const auto corrected = apply_lut(events.imager, events.geometry, lut);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  save_events(out_file, std::span<const ImagerEvent>(corrected), events.geometry);
  return out_file;
}

json run_report(const fs::path& reference,
                const std::vector<std::pair<std::string, fs::path>>& streams,
                const AnalysisOptions& options, const fs::path& out_dir,
                std::vector<fs::path>* written) {
  const auto ref = load_kind(reference, RecordType::reference);
  fs::create_directories(out_dir);
  PeakOptions peak_opts;
  peak_opts.full_width_fraction = options.full_width_fraction;

  json metrics;
  metrics["section_ps"] = options.section_ps;
  metrics["window_ps"] = options.window_ps;
  metrics["full_width_fraction"] = options.full_width_fraction;
  json per_stream = json::object();
  for (const auto& [label, path] : streams) {
    const auto img = load_kind(path, RecordType::imager);
    const auto pairs = find_coincidences(img.imager, ref.reference, options.window_ps);
    const auto set = build_histograms(pairs, img.geometry, img.geometry.n_codes,
                                      options.section_ps, options.window_ps);
    const auto agg = aggregate(set);
    const auto peak_path = out_dir / ("peak_" + label + ".txt");
    {
      auto out = open_out(peak_path);
      out << "# dt_ps counts\n";
      char buf[64];
      for (std::size_t i = 0; i < agg.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.1f %llu\n", agg.section_center(i),
                      static_cast<unsigned long long>(agg.counts[i]));
        out << buf;
      }
    }
    if (written) written->push_back(peak_path);
    per_stream[label] = metrics_json(peak_metrics(agg, peak_opts));
  }
  metrics["streams"] = per_stream;
  if (per_stream.contains("uncorrected") && per_stream.contains("corrected")) {
    const auto& u = per_stream["uncorrected"];
    const auto& c = per_stream["corrected"];
    metrics["improvement_factor"] =
        u["full_width_ps"].get<double>() / c["full_width_ps"].get<double>();
    metrics["improvement_factor_fwhm"] = u["fwhm_ps"].get<double>() / c["fwhm_ps"].get<double>();
  }
  if (per_stream.contains("linear") && per_stream.contains("corrected")) {
    metrics["improvement_over_linear"] =
        per_stream["linear"]["full_width_ps"].get<double>() /
        per_stream["corrected"]["full_width_ps"].get<double>();
  }
  const auto metrics_path = out_dir / "metrics.json";
  auto out = open_out(metrics_path);
  out << metrics.dump(2) << '\n';
  if (written) written->push_back(metrics_path);
  return metrics;
}

PipelineResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  PipelineResult result;
  auto& man = result.manifest;
  man.version = tool_version();
  man.command = "pipeline";
  man.seed = config.simulation.source.seed;
  man.config = to_json(config);
  man.threads = configure_threads();
  StageTimer timed(man.timing_ms);
  const auto t0 = std::chrono::steady_clock::now();

  auto& outs = result.outputs;
  const auto config_path = out_dir / "config.toml";
  {
    auto out = open_out(config_path);
    out << to_toml(config);
  }
  outs.push_back(config_path);

  const auto sim = timed("simulate", [&] { return run_simulate(config, out_dir); });
  outs.insert(outs.end(), {sim.reference, sim.imager, sim.ground_truth});

  const std::vector<fs::path> imager{sim.imager};
  const std::vector<fs::path> refs{sim.reference};
  const auto hist = timed("coincide", [&] { return run_coincide(imager, refs, config.analysis, out_dir); });
  outs.push_back(hist);

  const auto fit = timed("fit", [&] { return run_fit(hist, config.analysis, out_dir); });
  outs.insert(outs.end(), {fit.diagnostics, fit.models});
  const auto lut = timed("lut", [&] { return run_lut(fit.models, config.analysis, out_dir / "lut.json"); });
  outs.insert(outs.end(), {lut, out_dir / "lut.bin"});
  const auto corrected =
      timed("apply", [&] { return run_apply(sim.imager, lut, out_dir / "corrected.ptev"); });
  outs.push_back(corrected);

  auto linear_opts = config.analysis;
  linear_opts.poly_degree = 1;
  const auto fit_lin =
      timed("fit_linear", [&] { return run_fit(hist, linear_opts, out_dir, "_linear"); });
  outs.insert(outs.end(), {fit_lin.diagnostics, fit_lin.models});
  const auto lut_lin = timed("lut_linear", [&] {
    return run_lut(fit_lin.models, linear_opts, out_dir / "lut_linear.json");
  });
  outs.insert(outs.end(), {lut_lin, out_dir / "lut_linear.bin"});
  const auto corrected_lin = timed("apply_linear", [&] {
    return run_apply(sim.imager, lut_lin, out_dir / "corrected_linear.ptev");
  });
  outs.push_back(corrected_lin);

  result.metrics = timed("report", [&] {
    return run_report(sim.reference,
                      {{"uncorrected", sim.imager},
                       {"linear", corrected_lin},
                       {"corrected", corrected}},
                      config.analysis, out_dir, &outs);
  });

  man.timing_ms["total"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  man.outputs = digest_files(outs, out_dir);
  write_manifest(out_dir / "manifest.json", man);
  return result;
}

}  // namespace chronocal::app
