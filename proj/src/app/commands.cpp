#include "chronocal/app/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chronocal/app/config.hpp"
#include "chronocal/app/manifest.hpp"
#include "chronocal/app/stages.hpp"
#include "chronocal/errors.hpp"
#include "chronocal/threads.hpp"

namespace chronocal::app {
namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::uint32_t> group_size;
  std::optional<std::int64_t> section_ps;
  std::optional<std::int64_t> window_ps;
  std::optional<std::uint64_t> min_counts;
  std::optional<int> poly_degree;
  std::optional<std::string> reference_policy;
  std::optional<std::uint32_t> anchor_code;
  std::vector<std::string> refs;
  std::string lut;
  std::vector<std::string> inputs;
};

void add_analysis_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--group-size", f.group_size, "TDC codes per group (default 16)");
  cmd->add_option("--section-ps", f.section_ps, "Histogram section width in ps (default 100)");
  cmd->add_option("--window-ps", f.window_ps, "Coincidence half-window in ps (default 25000)");
  cmd->add_option("--min-counts", f.min_counts, "Minimum coincidences per group (default 100)");
  cmd->add_option("--poly-degree", f.poly_degree, "Drift polynomial degree 0-2 (default 2)");
  cmd->add_option("--reference-policy", f.reference_policy,
                  "weighted-mean, median or fixed:PS (default weighted-mean)");
  cmd->add_option("--anchor-code", f.anchor_code, "Code at which the reference is taken");
}

PipelineConfig effective_config(const Flags& f) {
  PipelineConfig config;
  if (!f.config.empty()) config = load_pipeline_config(f.config);
  auto& a = config.analysis;
  if (f.seed) config.simulation.source.seed = *f.seed;
  if (f.group_size) a.group_size = *f.group_size;
  if (f.section_ps) a.section_ps = *f.section_ps;
  if (f.window_ps) a.window_ps = *f.window_ps;
  if (f.min_counts) a.min_counts = *f.min_counts;
  if (f.poly_degree) a.poly_degree = *f.poly_degree;
  if (f.reference_policy) {
    const auto anchor = a.reference.anchor_code;
    a.reference = ReferencePolicy::parse(*f.reference_policy);
    a.reference.anchor_code = anchor;
  }
  if (f.anchor_code) a.reference.anchor_code = *f.anchor_code;
  if (a.group_size == 0) throw ConfigError("group size must be positive");
  if (a.poly_degree < 0 || a.poly_degree > 2) throw ConfigError("poly degree must be 0, 1 or 2");
  config.simulation.geometry.validate();
  config.simulation.source.validate();
  return config;
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

void require_files(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw IoError("no such file: " + p.string());
  }
}

std::vector<FileDigest> digest_inputs(const std::vector<fs::path>& paths) {
  std::vector<FileDigest> out;
  for (const auto& p : paths) out.push_back({p.string(), sha256_file(p)});
  return out;
}

// Label for a report stream: "label=path" or the file stem.
std::pair<std::string, fs::path> labelled(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

int execute(const std::string& command, const Flags& f, std::ostream& out) {
  const auto config = effective_config(f);
  const fs::path out_dir = f.out;
  const auto& opts = config.analysis;

  RunManifest man;
  man.version = tool_version();
  man.command = command;
  man.seed = config.simulation.source.seed;
  man.config = to_json(config);
  man.threads = configure_threads();
  const auto t0 = std::chrono::steady_clock::now();

  if (command == "pipeline") {
    const auto result = run_pipeline(config, out_dir);
    out << "pipeline: " << result.outputs.size() << " files in " << out_dir.string() << '\n';
    if (result.metrics.contains("improvement_factor")) {
      out << "improvement factor " << result.metrics["improvement_factor"].get<double>() << '\n';
    }
    return kExitOk;
  }

  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  if (command == "simulate") {
    const auto a = run_simulate(config, out_dir);
    outputs = {a.reference, a.imager, a.ground_truth};
    out << "simulate: " << a.pair_count << " pairs\n";
  } else if (command == "coincide") {
    const auto imager = to_paths(f.inputs);
    const auto refs = to_paths(f.refs);
    inputs = imager;
    inputs.insert(inputs.end(), refs.begin(), refs.end());
    require_files(inputs);
    outputs = {run_coincide(imager, refs, opts, out_dir)};
  } else if (command == "fit") {
    inputs = to_paths(f.inputs);
    require_files(inputs);
    const auto a = run_fit(inputs.front(), opts, out_dir);
    outputs = {a.diagnostics, a.models};
    out << "fit: " << a.calibrated << " pixels calibrated, " << a.failed << " failed\n";
  } else if (command == "lut") {
    inputs = to_paths(f.inputs);
    require_files(inputs);
    const auto json_path = run_lut(inputs.front(), opts, out_dir / "lut.json");
    outputs = {json_path, out_dir / "lut.bin"};
  } else if (command == "apply") {
    inputs = to_paths(f.inputs);
    inputs.emplace_back(f.lut);
    require_files(inputs);
    outputs = {run_apply(inputs.front(), f.lut, out_dir / "corrected.ptev")};
  } else if (command == "report") {
    std::vector<std::pair<std::string, fs::path>> streams;
    for (const auto& arg : f.inputs) streams.push_back(labelled(arg));
    inputs.emplace_back(f.refs.front());
    for (const auto& s : streams) inputs.push_back(s.second);
    require_files(inputs);
    const auto metrics = run_report(f.refs.front(), streams, opts, out_dir, &outputs);
    out << metrics.dump(2) << '\n';
  }

  man.timing_ms["total"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  man.inputs = digest_inputs(inputs);
  man.outputs = digest_files(outputs, out_dir);
  write_manifest(out_dir / ("manifest_" + command + ".json"), man);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SPAD imager TDC drift calibration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  Flags f;

  auto common = [&](CLI::App* cmd, bool analysis) {
    cmd->add_option("--config", f.config, "TOML configuration file");
    cmd->add_option("--out", f.out, "Output directory");
    if (analysis) add_analysis_flags(cmd, f);
  };

  auto* simulate = app.add_subcommand("simulate", "Generate reference and imager event streams");
  common(simulate, false);
  simulate->add_option("--seed", f.seed, "Random seed");

  auto* coincide = app.add_subcommand("coincide", "Build coincidence histograms");
  common(coincide, true);
  coincide->add_option("imager", f.inputs, "Imager event files")->required();
  coincide->add_option("--ref", f.refs, "Reference event file (one, or one per imager file)")
      ->required();

  auto* fit = app.add_subcommand("fit", "Fit per-pixel drift models");
  common(fit, true);
  fit->add_option("histograms", f.inputs, "histograms.csv")->required()->expected(1);

  auto* lut = app.add_subcommand("lut", "Build the correction lookup table");
  common(lut, true);
  lut->add_option("models", f.inputs, "drift_models.json")->required()->expected(1);

  auto* apply = app.add_subcommand("apply", "Correct an imager event stream");
  common(apply, false);
  apply->add_option("imager", f.inputs, "Imager event file")->required()->expected(1);
  apply->add_option("--lut", f.lut, "lut.json")->required();

  auto* report = app.add_subcommand("report", "Aggregate coincidence peak metrics");
  common(report, true);
  report->add_option("streams", f.inputs, "Imager files, optionally label=path")->required();
  report->add_option("--ref", f.refs, "Reference event file")->required()->expected(1);

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  common(pipeline, true);
  pipeline->add_option("--seed", f.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);  // --help or --version
      return kExitOk;
    }
    const auto parsed = app.get_subcommands();
    err << "chronocal: " << e.what() << "\n\n"
        << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  const auto* chosen = app.get_subcommands().front();
  try {
    return execute(chosen->get_name(), f, out);
  } catch (const IoError& e) {
    err << "chronocal: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "chronocal: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "chronocal: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace chronocal::app
