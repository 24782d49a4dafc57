#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "chronocal/errors.hpp"
#include "chronocal/histogram.hpp"

namespace chronocal {
namespace {

constexpr const char* kMetaTag = "# chronocal-histograms v1";
constexpr const char* kColumns = "pixel,group,section_index,section_left_edge_ps,count";

template <class T>
T parse_number(std::string_view s, const std::string& context) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("histogram csv: bad number '" + std::string(s) + "' in " + context);
  }
  return v;
}

}  // namespace

void write_histograms_csv(const HistogramSet& set, std::ostream& out) {
  const auto& g = set.geometry;
  const auto& l = set.layout;
  out << kMetaTag << " rows=" << g.rows << " cols=" << g.cols << " n_codes=" << g.n_codes
      << " bin_ps=" << g.bin_ps << " section_ps=" << l.section_ps << " origin_ps=" << l.origin_ps
      << " n_sections=" << l.n_sections << " group_size=" << l.group_size
      << " window_ps=" << l.window_ps << '\n';
  out << kColumns << '\n';
  for (const auto& [key, h] : set.histograms) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      if (h.counts[i] == 0) continue;
      out << key.pixel << ',' << key.group << ',' << i << ','
          << h.origin_ps + static_cast<std::int64_t>(i) * h.section_ps << ',' << h.counts[i]
          << '\n';
    }
  }
  if (!out) throw IoError("histogram csv: write failed");
}

HistogramSet read_histograms_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMetaTag, 0) != 0) {
    throw FormatError("histogram csv: missing metadata line");
  }
  std::map<std::string, std::int64_t> meta;
  {
    std::istringstream fields(line.substr(std::string(kMetaTag).size()));
    std::string kv;
    while (fields >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw FormatError("histogram csv: bad metadata field " + kv);
      meta[kv.substr(0, eq)] =
          parse_number<std::int64_t>(std::string_view(kv).substr(eq + 1), "metadata");
    }
  }
  auto need = [&](const char* name) {
    const auto it = meta.find(name);
    if (it == meta.end()) throw FormatError(std::string("histogram csv: metadata lacks ") + name);
    return it->second;
  };

  HistogramSet set;
  set.geometry.rows = static_cast<std::uint32_t>(need("rows"));
  set.geometry.cols = static_cast<std::uint32_t>(need("cols"));
  set.geometry.n_codes = static_cast<std::uint32_t>(need("n_codes"));
  set.geometry.bin_ps = static_cast<std::uint32_t>(need("bin_ps"));
  set.geometry.validate();
  set.layout = HistogramLayout::make(need("window_ps"), need("section_ps"),
                                     static_cast<std::uint32_t>(need("group_size")));
  if (set.layout.origin_ps != need("origin_ps") ||
      set.layout.n_sections != static_cast<std::uint32_t>(need("n_sections"))) {
    throw FormatError("histogram csv: inconsistent layout metadata");
  }

  if (!std::getline(in, line) || line != kColumns) {
    throw FormatError("histogram csv: missing column header");
  }
  const auto n_groups = set.layout.group_count(set.geometry.n_codes);
  std::uint64_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view f[5];
    for (int k = 0; k < 5; ++k) {
      const auto comma = rest.find(',');
      if (k < 4 && comma == std::string_view::npos) {
        throw FormatError("histogram csv: expected 5 fields on line " + std::to_string(line_no));
      }
      f[k] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    const std::string ctx = "line " + std::to_string(line_no);
    const auto pixel = parse_number<std::uint32_t>(f[0], ctx);
    const auto group = parse_number<std::uint32_t>(f[1], ctx);
    const auto section = parse_number<std::uint32_t>(f[2], ctx);
    const auto count = parse_number<std::uint64_t>(f[4], ctx);
    if (pixel >= set.geometry.pixel_count() || group >= n_groups ||
        section >= set.layout.n_sections) {
      throw RangeError("histogram csv: key out of range on " + ctx, line_no);
    }
    auto [it, inserted] = set.histograms.try_emplace(HistogramKey{pixel, group});
    auto& h = it->second;
    if (inserted) {
      h.pixel = set.geometry.pixel(pixel);
      h.group = group;
      h.section_ps = set.layout.section_ps;
      h.origin_ps = set.layout.origin_ps;
      h.counts.assign(set.layout.n_sections, 0);
    }
    h.counts[section] += count;
    h.total += count;
  }
  return set;
}

}  // namespace chronocal
