#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tilelab/schrodinger.hpp"
#include "tilelab/solenoid.hpp"

namespace tilelab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitUnsupported = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run description. `doc` holds everything; per-command parameters live in
// doc[command]. Defaults are filled in by the command, not stored here.
struct ExperimentConfig {
  std::string command;
  nlohmann::json doc = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::filesystem::path out = "tilelab-out";
  std::size_t threads = 1;

  nlohmann::json block() const;  // doc[command], or an empty object
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Family: "halfhex", "solenoid:2:2,3", {"builtin": name} or {"file": path}.
RuleFamily config_family(const nlohmann::json& doc, std::string_view fallback);
// Sequence: doc["sequence"] = {"file"}, {"constant"}, {"periodic"}; else sampled
// from doc["measure"] with the master seed. One-rule families default to the
// constant sequence.
SymbolSequence config_sequence(const nlohmann::json& doc, const RuleFamily& family, std::size_t length,
                               std::uint64_t seed);
// "square", "disk", {"centered_box": s}, {"box": {"corner", "widths"}},
// {"disk": {"center", "radius"}}, {"polygon": [[x, y], ...]}.
Region parse_region(const nlohmann::json& j);
// Strings are parsed exactly ("3/4", "0.1"); numbers through their shortest
// decimal form.
Rational json_rational(const nlohmann::json& j);
KernelSpec parse_kernel(const nlohmann::json& j);

std::string format_double(double value);  // 17 significant digits

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

std::string sha256_hex(std::string_view data);

struct SvgStyle {
  enum class Color { type, supertile };
  Color color = Color::type;
  double stroke = 0.03;
  std::string title;
};

// Plane coordinates: half-hex families use the lattice basis (1, 0),
// (1/2, sqrt 3/2); everything else is drawn as given.
std::pair<double, double> embed(const RuleFamily& family, const Vec2& p);

// One path element per tile, in patch order; outlines (e.g. supertile
// footprints) are drawn on top without fill.
std::string render_svg(const RuleFamily& family, const Patch& patch, const SvgStyle& style = {},
                       const std::vector<Polygon>& outlines = {});

// Patch from the CSV written by the patch command.
Patch read_patch_csv(const RuleFamily& family, std::string_view text);

struct RunResult {
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  nlohmann::json summary = nlohmann::json::object();
  int exit_code = kExitOk;  // nonzero when the run completed but a check failed
};

RunResult run_command(const ExperimentConfig& config);
// Writes the files and manifest.json into config.out; returns the manifest.
nlohmann::json write_outputs(const ExperimentConfig& config, const RunResult& result);
nlohmann::json make_manifest(const ExperimentConfig& config, const RunResult& result);

int main_entry(int argc, char** argv);

}  // namespace tilelab::cli
