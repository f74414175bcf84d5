#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tilelab_cli/cli.hpp"

#ifndef TILELAB_VERSION
#define TILELAB_VERSION "unknown"
#endif

namespace tilelab::cli {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
  text_ += '\n';
  ++rows_;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

bool lattice_coordinates(const RuleFamily& family) { return family.name.rfind("halfhex", 0) == 0; }

std::string coord(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

const char* palette(int index) {
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
                                 "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295"};
  if (index < 0) return "#cccccc";
  return colors[index % 12];
}

using Outline = std::vector<std::pair<double, double>>;

Outline outline_of(const RuleFamily& family, const Polygon& poly) {
  Outline out;
  if (family.dimension == 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : poly) {
      lo = std::min(lo, to_double(v.x));
      hi = std::max(hi, to_double(v.x));
    }
    return {{lo, -0.15}, {hi, -0.15}, {hi, 0.15}, {lo, 0.15}};
  }
  for (const auto& v : poly) {
    auto [x, y] = embed(family, v);
    out.emplace_back(x, -y);  // svg y points down
  }
  return out;
}

std::string path_data(const Outline& o) {
  std::string d;
  for (std::size_t i = 0; i < o.size(); ++i) d += (i ? " L" : "M") + coord(o[i].first) + "," + coord(o[i].second);
  return d + " Z";
}

// Tile translations are rationals with small denominators; CSV stores them as
// 17-digit decimals. Recover the fraction by continued fractions.
Rational coordinate_from_text(const std::string& text) {
  if (text.find('/') != std::string::npos) return parse_rational(text);
  const double v = std::stod(text);
  if (!std::isfinite(v)) throw ConfigError("non-finite coordinate " + text);
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = v;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e12) break;
    const long ai = static_cast<long>(a);
    const long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(static_cast<double>(h1) / k1 - v) <= 1e-12 * std::max(1.0, std::abs(v))) return ratio(h1, k1);
    if (r == a) break;
    r = 1.0 / (r - a);
  }
  return rational_from_double(v);
}

}  // namespace

std::pair<double, double> embed(const RuleFamily& family, const Vec2& p) {
  const double x = to_double(p.x), y = to_double(p.y);
  if (lattice_coordinates(family)) return {x + 0.5 * y, std::sqrt(3.0) / 2.0 * y};
  return {x, y};
}

std::string render_svg(const RuleFamily& family, const Patch& patch, const SvgStyle& style,
                       const std::vector<Polygon>& outlines) {
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (patch.empty() && outlines.empty()) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\" width=\"100\" height=\"100\">\n"
        << "<!-- empty patch: 0 tiles, family " << family.name << " -->\n</svg>\n";
    return svg.str();
  }
  std::vector<Outline> tiles, extra;
  for (const auto& t : patch.tiles) tiles.push_back(outline_of(family, tile_polygon(family, t)));
  for (const auto& p : outlines) extra.push_back(outline_of(family, p));
  double minx = std::numeric_limits<double>::infinity(), miny = minx, maxx = -minx, maxy = -minx;
  for (const auto* group : {&tiles, &extra})
    for (const auto& o : *group)
      for (const auto& [x, y] : o) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
  const double pad = 0.5;
  minx -= pad;
  miny -= pad;
  const double w = maxx - minx + pad, h = maxy - miny + pad;
  const double px = 600.0 / std::max(w, h);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << coord(minx) << " " << coord(miny) << " "
      << coord(w) << " " << coord(h) << "\" width=\"" << coord(w * px) << "\" height=\"" << coord(h * px) << "\">\n";
  if (!style.title.empty()) svg << "<title>" << style.title << "</title>\n";
  svg << "<!-- " << patch.size() << " tiles, family " << family.name << " -->\n";
  svg << "<g stroke=\"#222222\" stroke-width=\"" << coord(style.stroke) << "\" stroke-linejoin=\"round\">\n";
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto& t = patch.tiles[i];
    const int color = style.color == SvgStyle::Color::type ? t.type : t.supertile_type;
    svg << "<path d=\"" << path_data(tiles[i]) << "\" fill=\"" << palette(color) << "\"/>\n";
  }
  svg << "</g>\n";
  if (!extra.empty()) {
    svg << "<g fill=\"none\" stroke=\"#000000\" stroke-width=\"" << coord(3 * style.stroke) << "\">\n";
    for (const auto& o : extra) svg << "<path d=\"" << path_data(o) << "\"/>\n";
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

Patch read_patch_csv(const RuleFamily& family, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("prototile_id", 0) != 0) throw ConfigError("not a patch CSV");
  Patch patch;
  patch.dimension = family.dimension;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ConfigError("bad patch CSV row: " + line);
    PlacedTile t;
    try {
      const int id = std::stoi(cells[0]);
      auto it = std::find_if(family.prototiles.begin(), family.prototiles.end(),
                             [&](const Prototile& p) { return p.id == id; });
      if (it == family.prototiles.end()) throw ConfigError("patch CSV names unknown prototile " + cells[0]);
      t.type = static_cast<int>(it - family.prototiles.begin());
      t.translation = {coordinate_from_text(cells[1]), coordinate_from_text(cells[2])};
      t.supertile_level = std::stoi(cells[3]);
      t.supertile_type = std::stoi(cells[4]);
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad patch CSV row: " + line);
    }
    patch.tiles.push_back(std::move(t));
  }
  return patch;
}

json make_manifest(const ExperimentConfig& config, const RunResult& result) {
  json m;
  m["tool"] = "tilelab";
  m["version"] = TILELAB_VERSION;
  m["command"] = config.command;
  m["seed"] = config.seed;
  m["config"] = config.to_json();
  json outputs = json::array();
  for (const auto& [name, contents] : result.files)
    outputs.push_back({{"file", name}, {"sha256", sha256_hex(contents)}, {"bytes", contents.size()}});
  m["outputs"] = outputs;
  m["summary"] = result.summary;
  return m;
}

json write_outputs(const ExperimentConfig& config, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + config.out.string() + ": " + ec.message());
  for (const auto& [name, contents] : result.files) {
    std::ofstream f(config.out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (config.out / name).string());
    f << contents;
  }
  const json manifest = make_manifest(config, result);
  std::ofstream f(config.out / "manifest.json", std::ios::binary);
  if (!f) throw ConfigError("cannot write manifest");
  f << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace tilelab::cli
