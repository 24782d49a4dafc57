#include "chronocal/app/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "chronocal/errors.hpp"

namespace chronocal::app {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Removes a trailing # comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Reader {
 public:
  Reader(const KeyValueFile& file, std::string origin) : file_(file), origin_(std::move(origin)) {}

  template <class T>
  void number(const std::string& section, const std::string& key, T& out) {
    const auto v = take(section, key);
    if (!v) return;
    T parsed{};
    const char* first = v->data();
    const char* last = v->data() + v->size();
    std::from_chars_result r{};
    if constexpr (std::is_floating_point_v<T>) {
      r = std::from_chars(first, last, parsed, std::chars_format::general);
    } else {
      r = std::from_chars(first, last, parsed);
    }
    if (r.ec != std::errc{} || r.ptr != last) {
      throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + *v + "' is not a valid " +
                        (std::is_floating_point_v<T> ? "number" : "integer"));
    }
    out = parsed;
  }

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return file_.get(section, key);
  }

  void reject_unknown() const {
    for (const auto& [section, keys] : file_.sections()) {
      for (const auto& [key, value] : keys) {
        if (!used_.count(section + "." + key)) {
          throw ConfigError(origin_ + ": unknown key [" + section + "] " + key);
        }
      }
    }
  }

 private:
  const KeyValueFile& file_;
  std::string origin_;
  std::set<std::string> used_;
};

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& origin) {
  KeyValueFile f;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      f.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (!value.empty() && value.front() == '"') {
      throw ConfigError(where + ": unterminated string");
    }
    if (section.empty()) throw ConfigError(where + ": key outside of a [section]");
    auto& keys = f.sections_[section];
    if (keys.count(key)) throw ConfigError(where + ": duplicate key " + key);
    keys[key] = value;
  }
  return f;
}

std::optional<std::string> KeyValueFile::get(const std::string& section,
                                             const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

PipelineConfig parse_pipeline_config(std::istream& in, const std::string& origin) {
  const auto file = KeyValueFile::parse(in, origin);
  for (const auto& [section, keys] : file.sections()) {
    if (section != "geometry" && section != "source" && section != "drift" &&
        section != "analysis") {
      throw ConfigError(origin + ": unknown section [" + section + "]");
    }
  }
  Reader r(file, origin);
  PipelineConfig c;
  auto& g = c.simulation.geometry;
  r.number("geometry", "rows", g.rows);
  r.number("geometry", "cols", g.cols);
  r.number("geometry", "n_codes", g.n_codes);
  r.number("geometry", "bin_ps", g.bin_ps);

  auto& s = c.simulation.source;
  r.number("source", "pair_rate_hz", s.pair_rate_hz);
  r.number("source", "corr_jitter_ps", s.corr_jitter_ps);
  r.number("source", "ref_jitter_ps", s.ref_jitter_ps);
  if (file.get("source", "ref_jitter_ps") && file.get("source", "ref_jitter_fwhm_ps")) {
    throw ConfigError(origin + ": give ref_jitter_ps or ref_jitter_fwhm_ps, not both");
  }
  double fwhm = -1.0;
  r.number("source", "ref_jitter_fwhm_ps", fwhm);
  if (fwhm >= 0.0) s.ref_jitter_ps = fwhm / kFwhmPerSigma;
  r.number("source", "dark_rate_ref_hz", s.dark_rate_ref_hz);
  r.number("source", "dark_rate_img_hz", s.dark_rate_img_hz);
  r.number("source", "duration_s", s.duration_s);
  r.number("source", "seed", s.seed);
  r.number("source", "ref_efficiency", s.ref_efficiency);
  r.number("source", "img_efficiency", s.img_efficiency);
  r.number("source", "ref_dead_time_ps", s.ref_dead_time_ps);
  r.number("source", "frame_ps", s.frame_ps);
  if (auto v = r.take("source", "arrival")) s.arrival = parse_arrival_mode(*v);
  r.number("source", "tail_knee_code", s.tail_knee_code);

  auto& d = c.simulation.drift;
  if (auto v = r.take("drift", "profile")) d.profile = parse_drift_profile(*v);
  r.number("drift", "alpha", d.alpha);
  r.number("drift", "beta", d.beta);
  r.number("drift", "skew_ps", d.skew_ps);
  r.number("drift", "edge_ratio", d.edge_ratio);
  r.number("drift", "mismatch", d.mismatch);
  r.number("drift", "skew_spread_ps", d.skew_spread_ps);
  r.number("drift", "activity_gain", d.activity_gain);

  auto& a = c.analysis;
  r.number("analysis", "group_size", a.group_size);
  r.number("analysis", "section_ps", a.section_ps);
  r.number("analysis", "window_ps", a.window_ps);
  r.number("analysis", "min_counts", a.min_counts);
  r.number("analysis", "poly_degree", a.poly_degree);
  if (auto v = r.take("analysis", "reference_policy")) {
    const auto anchor = a.reference.anchor_code;
    a.reference = ReferencePolicy::parse(*v);
    a.reference.anchor_code = anchor;
  }
  r.number("analysis", "anchor_code", a.reference.anchor_code);
  r.number("analysis", "full_width_fraction", a.full_width_fraction);

  r.reject_unknown();
  g.validate();
  s.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  return parse_pipeline_config(in, path.string());
}

std::string to_toml(const PipelineConfig& c) {
  const auto& g = c.simulation.geometry;
  const auto& s = c.simulation.source;
  const auto& d = c.simulation.drift;
  const auto& a = c.analysis;
  std::ostringstream o;
  o << "[geometry]\n"
    << "rows = " << g.rows << "\ncols = " << g.cols << "\nn_codes = " << g.n_codes
    << "\nbin_ps = " << g.bin_ps << "\n\n[source]\n"
    << "pair_rate_hz = " << fmt_double(s.pair_rate_hz) << "\n"
    << "corr_jitter_ps = " << fmt_double(s.corr_jitter_ps) << "\n"
    << "ref_jitter_ps = " << fmt_double(s.ref_jitter_ps) << "\n"
    << "dark_rate_ref_hz = " << fmt_double(s.dark_rate_ref_hz) << "\n"
    << "dark_rate_img_hz = " << fmt_double(s.dark_rate_img_hz) << "\n"
    << "duration_s = " << fmt_double(s.duration_s) << "\n"
    << "seed = " << s.seed << "\n"
    << "ref_efficiency = " << fmt_double(s.ref_efficiency) << "\n"
    << "img_efficiency = " << fmt_double(s.img_efficiency) << "\n"
    << "ref_dead_time_ps = " << fmt_double(s.ref_dead_time_ps) << "\n"
    << "frame_ps = " << s.frame_ps << "\n"
    << "arrival = \"" << to_string(s.arrival) << "\"\n"
    << "tail_knee_code = " << s.tail_knee_code << "\n\n[drift]\n"
    << "profile = \"" << to_string(d.profile) << "\"\n"
    << "alpha = " << fmt_double(d.alpha) << "\n"
    << "beta = " << fmt_double(d.beta) << "\n"
    << "skew_ps = " << fmt_double(d.skew_ps) << "\n"
    << "edge_ratio = " << fmt_double(d.edge_ratio) << "\n"
    << "mismatch = " << fmt_double(d.mismatch) << "\n"
    << "skew_spread_ps = " << fmt_double(d.skew_spread_ps) << "\n"
    << "activity_gain = " << fmt_double(d.activity_gain) << "\n\n[analysis]\n"
    << "group_size = " << a.group_size << "\n"
    << "section_ps = " << a.section_ps << "\n"
    << "window_ps = " << a.window_ps << "\n"
    << "min_counts = " << a.min_counts << "\n"
    << "poly_degree = " << a.poly_degree << "\n"
    << "reference_policy = \"" << a.reference.to_string() << "\"\n"
    << "anchor_code = " << a.reference.anchor_code << "\n"
    << "full_width_fraction = " << fmt_double(a.full_width_fraction) << "\n";
  return o.str();
}

nlohmann::json to_json(const PipelineConfig& c) {
  std::istringstream in(to_toml(c));
  const auto file = KeyValueFile::parse(in);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, keys] : file.sections()) {
    for (const auto& [key, value] : keys) j[section][key] = value;
  }
  return j;
}

}  // namespace chronocal::app
