#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "chronocal/errors.hpp"
#include "chronocal/lut.hpp"

namespace chronocal {

using nlohmann::json;

void write_lut_json(const CorrectionLut& lut, std::ostream& out) {
  json doc;
  doc["format"] = "chronocal-lut";
  doc["version"] = 1;
  doc["geometry"] = {{"rows", lut.geometry.rows},
                     {"cols", lut.geometry.cols},
                     {"n_codes", lut.geometry.n_codes},
                     {"bin_ps", lut.geometry.bin_ps}};
  doc["reference_ps"] = lut.reference_ps;
  doc["reference_policy"] = lut.policy.to_string();
  doc["anchor_code"] = lut.policy.anchor_code;
  doc["degree"] = lut.degree;
  json pixels = json::array();
  for (std::size_t p = 0; p < lut.pixels.size(); ++p) {
    const auto& e = lut.pixels[p];
    pixels.push_back({{"pixel", p},
                      {"row", e.model.pixel.row},
                      {"col", e.model.pixel.col},
                      {"calibrated", e.calibrated},
                      {"coeffs", {e.model.coeffs[0], e.model.coeffs[1], e.model.coeffs[2]}},
                      {"degree", e.model.degree},
                      {"valid_code_max", e.model.valid_code_max},
                      {"n_groups_used", e.model.n_groups_used},
                      {"total_counts", e.model.total_counts}});
  }
  doc["pixels"] = std::move(pixels);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("lut json: write failed");
}

void write_lut_table(const CorrectionLut& lut, std::ostream& out) {
  std::vector<unsigned char> buf(lut.offsets.size() * 4);
  for (std::size_t i = 0; i < lut.offsets.size(); ++i) {
    const auto v = static_cast<std::uint32_t>(lut.offsets[i]);
    for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<unsigned char>(v >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("lut table: write failed");
}

CorrectionLut read_lut_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("lut json: ") + e.what());
  }
  try {
    if (doc.at("format") != "chronocal-lut") throw FormatError("lut json: not a chronocal LUT");
    DetectorGeometry g;
    g.rows = doc.at("geometry").at("rows").get<std::uint32_t>();
    g.cols = doc.at("geometry").at("cols").get<std::uint32_t>();
    g.n_codes = doc.at("geometry").at("n_codes").get<std::uint32_t>();
    g.bin_ps = doc.at("geometry").at("bin_ps").get<std::uint32_t>();
    g.validate();

    CorrectionLut lut;
    lut.geometry = g;
    lut.reference_ps = doc.at("reference_ps").get<double>();
    lut.policy = ReferencePolicy::parse(doc.at("reference_policy").get<std::string>());
    lut.policy.anchor_code = doc.at("anchor_code").get<std::uint32_t>();
    lut.degree = doc.at("degree").get<int>();
    const auto& pixels = doc.at("pixels");
    if (pixels.size() != g.pixel_count()) {
      throw FormatError("lut json: pixel count does not match geometry");
    }
    lut.pixels.resize(g.pixel_count());
    for (const auto& jp : pixels) {
      const auto p = jp.at("pixel").get<std::size_t>();
      if (p >= g.pixel_count()) throw FormatError("lut json: pixel index out of range");
      auto& e = lut.pixels[p];
      e.calibrated = jp.at("calibrated").get<bool>();
      e.model.pixel = g.pixel(static_cast<std::uint32_t>(p));
      const auto& c = jp.at("coeffs");
      for (std::size_t k = 0; k < 3; ++k) e.model.coeffs[k] = c.at(k).get<double>();
      e.model.degree = jp.at("degree").get<int>();
      e.model.valid_code_max = jp.at("valid_code_max").get<std::uint32_t>();
      e.model.n_groups_used = jp.at("n_groups_used").get<int>();
      e.model.total_counts = jp.at("total_counts").get<std::uint64_t>();
    }
    lut.offsets.assign(g.pixel_count() * g.n_codes, 0);
    for (std::size_t p = 0; p < lut.pixels.size(); ++p) {
      for (std::uint32_t code = 0; code < g.n_codes; ++code) {
        lut.offsets[p * g.n_codes + code] = offset_for(lut.reference_ps, lut.pixels[p].model, code);
      }
    }
    return lut;
  } catch (const json::exception& e) {
    throw FormatError(std::string("lut json: ") + e.what());
  }
}

void read_lut_table(std::istream& in, CorrectionLut& lut) {
  const std::size_t n = lut.geometry.pixel_count() * lut.geometry.n_codes;
  std::vector<unsigned char> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw TruncationError("lut table: expected " + std::to_string(buf.size()) + " bytes",
                          static_cast<std::uint64_t>(in.gcount()) / 4 * 4);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("lut table: trailing bytes after " + std::to_string(n) + " entries");
  }
  lut.offsets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(buf[4 * i + b]) << (8 * b);
    lut.offsets[i] = static_cast<std::int32_t>(v);
  }
}

void save_lut(const std::filesystem::path& json_path, const CorrectionLut& lut) {
  {
    std::ofstream out(json_path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + json_path.string());
    write_lut_json(lut, out);
  }
  auto table_path = json_path;
  table_path.replace_extension(".bin");
  std::ofstream out(table_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + table_path.string());
  write_lut_table(lut, out);
}

CorrectionLut load_lut(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open for reading: " + json_path.string());
  auto lut = read_lut_json(in);
  auto table_path = json_path;
  table_path.replace_extension(".bin");
  if (std::filesystem::exists(table_path)) {
    std::ifstream tin(table_path, std::ios::binary);
    if (!tin) throw IoError("cannot open for reading: " + table_path.string());
    read_lut_table(tin, lut);
  }
  return lut;
}

}  // namespace chronocal
