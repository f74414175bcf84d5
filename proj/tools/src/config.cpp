#include <fstream>
#include <sstream>

#include "tilelab_cli/cli.hpp"

namespace tilelab::cli {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vec2 json_vec(const json& j) {
  if (!j.is_array() || j.size() < 1 || j.size() > 2) throw ConfigError("expected a point [x, y]: " + j.dump());
  return {json_rational(j[0]), j.size() == 2 ? json_rational(j[1]) : Rational(0)};
}

}  // namespace

json ExperimentConfig::block() const {
  if (doc.contains(command) && doc[command].is_object()) return doc[command];
  return json::object();
}

json ExperimentConfig::to_json() const {
  json j = doc;
  j["command"] = command;
  j["seed"] = seed;
  j["out"] = out.string();
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.doc = doc;
  try {
    if (doc.contains("command")) c.command = doc["command"].get<std::string>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out")) c.out = doc["out"].get<std::string>();
    if (doc.contains("threads")) c.threads = doc["threads"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  if (c.threads == 0) c.threads = 1;
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ConfigError("config is empty");
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.empty()) throw ConfigError("config is empty");
  return ExperimentConfig::from_json(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

Rational json_rational(const json& j) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(BigInt(j.dump(), 10));
    if (j.is_number()) return parse_rational(j.dump());
  } catch (const Error& e) {
    throw ConfigError(std::string("bad number ") + j.dump() + ": " + e.what());
  }
  throw ConfigError("expected a number, got " + j.dump());
}

RuleFamily config_family(const json& doc, std::string_view fallback) {
  const json f = doc.contains("family") ? doc["family"] : json(std::string(fallback));
  try {
    if (f.is_string()) return builtin_family(f.get<std::string>());
    if (f.is_object() && f.contains("builtin")) return builtin_family(f["builtin"].get<std::string>());
    if (f.is_object() && f.contains("file")) return load_family(f["file"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad family: ") + e.what());
  }
  throw ConfigError("family must be a builtin name, {\"builtin\": name} or {\"file\": path}");
}

SymbolSequence config_sequence(const json& doc, const RuleFamily& family, std::size_t length, std::uint64_t seed) {
  SymbolSequence x;
  if (doc.contains("sequence")) {
    const json& s = doc["sequence"];
    try {
      if (s.contains("file")) {
        x = read_sequence(read_text(s["file"].get<std::string>()));
      } else if (s.contains("constant")) {
        x = constant_sequence(s["constant"].get<int>(), length);
      } else if (s.contains("periodic")) {
        x = periodic_sequence(s["periodic"].get<std::vector<int>>(), length);
      } else {
        throw ConfigError("sequence needs one of file, constant, periodic");
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad sequence: ") + e.what());
    }
  } else if (doc.contains("measure")) {
    x = sample_sequence(parse_measure(doc["measure"].get<std::string>()), length, seed);
  } else if (family.rules.size() == 1) {
    x = constant_sequence(1, length);
  } else {
    x = sample_sequence(MeasureSpec::bernoulli(0.5), length, seed);
  }
  for (int s : x.positive)
    if (s < 1 || static_cast<std::size_t>(s) > family.rules.size())
      throw ConfigError("sequence symbol " + std::to_string(s) + " has no rule in family " + family.name);
  return x;
}

Region parse_region(const json& j) {
  try {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      if (name == "square") return Region::centered_box(1);
      if (name == "disk") return Region::disk({}, 1);
      throw ConfigError("unknown region '" + name + "'");
    }
    if (j.contains("centered_box")) return Region::centered_box(json_rational(j["centered_box"]));
    if (j.contains("box")) return Region::box(json_vec(j["box"].at("corner")), json_vec(j["box"].at("widths")));
    if (j.contains("disk")) {
      const json& d = j["disk"];
      return Region::disk(d.contains("center") ? json_vec(d["center"]) : Vec2{}, json_rational(d.at("radius")));
    }
    if (j.contains("polygon")) {
      Polygon poly;
      for (const auto& v : j["polygon"]) poly.push_back(json_vec(v));
      return Region::polygon(std::move(poly));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad region: ") + e.what());
  }
  throw ConfigError("unknown region " + j.dump());
}

KernelSpec parse_kernel(const json& j) {
  if (!j.is_object()) throw ConfigError("kernel must be a JSON object");
  KernelSpec k;
  try {
    if (j.contains("range")) k.range = json_rational(j["range"]);
    if (j.contains("diagonal")) {
      const json& d = j["diagonal"];
      if (d.contains("by_type"))
        for (const auto& v : d["by_type"]) k.diagonal_by_type.push_back(json_rational(v));
      if (d.contains("by_pattern"))
        for (const auto& [id, v] : d["by_pattern"].items()) k.diagonal_by_pattern.emplace_back(id, json_rational(v));
    }
    k.laplacian_diagonal = j.value("laplacian", false);
    if (j.contains("hops")) {
      for (const auto& h : j["hops"]) {
        HopRule rule;
        rule.from_pattern = h.value("from_pattern", std::string());
        rule.from_type = h.value("from_type", -1);
        rule.to_type = h.value("to_type", -1);
        if (h.contains("displacement")) rule.displacement = json_vec(h["displacement"]);
        if (h.contains("re")) rule.re = json_rational(h["re"]);
        if (h.contains("im")) rule.im = json_rational(h["im"]);
        k.hops.push_back(std::move(rule));
      }
    }
    if (j.contains("hop_default")) k.hop_default = json_rational(j["hop_default"]);
    k.hermitian = j.value("hermitian", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad kernel: ") + e.what());
  }
  if (k.range <= 0) throw ConfigError("kernel range must be positive");
  return k;
}

}  // namespace tilelab::cli
