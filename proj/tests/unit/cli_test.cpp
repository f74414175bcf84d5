#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tilelab_cli/cli.hpp"

namespace tilelab::cli {
namespace {

using nlohmann::json;

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

const std::string& file(const RunResult& r, const std::string& name) {
  for (const auto& [n, contents] : r.files)
    if (n == name) return contents;
  throw std::runtime_error("missing output " + name);
}

ExperimentConfig config_for(const std::string& command, json block = json::object(), std::uint64_t seed = 1) {
  json doc = {{"command", command}, {"seed", seed}};
  if (!block.empty()) doc[command] = block;
  return ExperimentConfig::from_json(doc);
}

Patch level_patch(const RuleFamily& family, int level) {
  SupertileTree tree(family, constant_sequence(1, level + 4));
  Patch patch;
  tree.expand(tree.central(level), [&](const SupertileNode& n) {
    if (n.level == 0) patch.tiles.push_back({n.type, n.offset, 0, -1});
    return true;
  });
  return patch;
}

int run_main(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

TEST(Cli, SpectrumSweepHasElevenBySixRows) {
  const auto r = run_command(config_for("spectrum", {{"steps", 1000}}));
  const auto rows = lines_of(file(r, "spectrum.csv"));
  ASSERT_EQ(rows.size(), 1u + 11 * 6);
  EXPECT_EQ(rows[0], "p,index,exponent[nats],stderr[nats],multiplicity,normalized[1]");
  EXPECT_EQ(rows[1].substr(0, 4), "0,1,");
  EXPECT_EQ(rows.back().substr(0, 4), "1,6,");
}

TEST(Cli, HalfHexPatchAfterThreeLevelsHasSixtyFourPolygons) {
  const auto r = run_command(config_for("patch", {{"levels", 3}}));
  EXPECT_EQ(count_of(file(r, "patch.svg"), "<path"), 64u);
  EXPECT_EQ(lines_of(file(r, "patch.csv")).size(), 65u);
  EXPECT_EQ(r.summary["tiles"], 64);
}

TEST(Cli, RenderCounts) {
  const auto hh = halfhex_family();
  EXPECT_EQ(count_of(render_svg(hh, level_patch(hh, 0)), "<path"), 1u);
  EXPECT_EQ(count_of(render_svg(hh, level_patch(hh, 2)), "<path"), 16u);
  const std::string empty = render_svg(hh, Patch{});
  EXPECT_EQ(count_of(empty, "<path"), 0u);
  EXPECT_NE(empty.find("empty patch"), std::string::npos);
}

TEST(Cli, RenderIsDeterministic) {
  const auto hh = halfhex_family();
  const Patch p = level_patch(hh, 3);
  EXPECT_EQ(render_svg(hh, p), render_svg(hh, p));
  SvgStyle by_supertile;
  by_supertile.color = SvgStyle::Color::supertile;
  EXPECT_EQ(count_of(render_svg(hh, p, by_supertile), "<path"), 64u);
}

TEST(Cli, PatchCsvRoundTrips) {
  const auto hh = halfhex_family();
  const Patch p = level_patch(hh, 2);
  const Patch back = read_patch_csv(hh, patch_to_csv(hh, p));
  EXPECT_EQ(tile_multiset(back), tile_multiset(p));
  EXPECT_EQ(render_svg(hh, back), render_svg(hh, p));
}

TEST(Cli, EmptyConfigIsAUsageError) {
  EXPECT_THROW(parse_config("{}"), ConfigError);
  EXPECT_THROW(parse_config("  \n"), ConfigError);
  EXPECT_THROW(parse_config("{\"command\": "), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "tilelab_empty_config.json";
  std::ofstream(path) << "{}";
  EXPECT_EQ(run_main({"tilelab", "--config", path.string()}), kExitConfig);
  EXPECT_EQ(run_main({"tilelab"}), kExitConfig);
  EXPECT_EQ(run_main({"tilelab", "frobnicate"}), kExitConfig);
}

TEST(Cli, ManifestHashesAreStable) {
  const auto cfg = config_for("decompose", {{"T", 8}}, 7);
  const auto a = make_manifest(cfg, run_command(cfg));
  const auto b = make_manifest(cfg, run_command(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["seed"], 7);
  ASSERT_EQ(a["outputs"].size(), 2u);
  for (const auto& o : a["outputs"]) EXPECT_EQ(o["sha256"].get<std::string>().size(), 64u);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ConfigRoundTripsThroughJson) {
  const auto cfg = config_for("dk", {{"q", "|2,3"}, {"trials", 2}}, 42);
  const auto again = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(again.to_json(), cfg.to_json());
  EXPECT_EQ(make_manifest(again, run_command(again)), make_manifest(cfg, run_command(cfg)));
}

TEST(Cli, SeedsChangeSampledOutputs) {
  const json block = {{"measure", "bernoulli:0.5"}, {"family", "halfhex_pair"}, {"steps", 1000}, {"p", {0.5}}};
  const auto a = run_command(config_for("spectrum", block, 1));
  const auto b = run_command(config_for("spectrum", block, 2));
  EXPECT_NE(file(a, "spectrum.csv"), file(b, "spectrum.csv"));
}

TEST(Cli, EveryCsvHeaderNamesUnits) {
  const std::vector<std::pair<std::string, json>> runs = {
      {"spectrum", {{"steps", 1000}, {"p", {0.0, 1.0}}}},
      {"decompose", {{"T", 4}, {"svg", false}}},
      {"deviate", {{"T", {4, 8, 16, 32}}, {"observable", "volume"}}},
      {"dk", {{"trials", 1}, {"base_points", 1}}},
      {"schrod", {{"kernel", {{"diagonal", {{"by_type", {1, 2, 3, 4, 5, 6}}}}, {"hop_default", 1}}}, {"scales", {2, 4}}}}};
  for (const auto& [command, block] : runs) {
    const auto r = run_command(config_for(command, block));
    for (const auto& [name, contents] : r.files) {
      if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
      const auto header = lines_of(contents).at(0);
      EXPECT_NE(header.find('['), std::string::npos) << name << ": " << header;
    }
  }
}

TEST(Cli, DkRunReportsNoViolations) {
  const auto r = run_command(config_for("dk", {{"d", 2}, {"trials", 3}, {"base_points", 2}}));
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(r.summary["violations"], 0);
  EXPECT_EQ(r.summary["cases"], 3 * 2 * 11);
}

TEST(Cli, SchrodInteriorTracesMatch) {
  const json kernel = {{"diagonal", {{"by_type", {"1/3", -2, 5, 0, 1, 7}}}}, {"hop_default", "1/2"}};
  const auto r = run_command(config_for("schrod", {{"kernel", kernel}, {"scales", {4, 8}}}));
  EXPECT_EQ(r.summary["interior_traces_match"], true);
  EXPECT_EQ(lines_of(file(r, "traces.csv")).size(), 3u);
  EXPECT_EQ(r.summary["sup_differences"].size(), 1u);
}

TEST(Cli, ErrorsMapToExitCodes) {
  const auto out = (std::filesystem::temp_directory_path() / "tilelab_cli_test").string();
  EXPECT_EQ(run_main({"tilelab", "--out", out, "--family", "nonesuch", "patch"}), kExitConfig);
  EXPECT_EQ(run_main({"tilelab", "--out", out, "deviate", "--mode", "sideways"}), kExitConfig);
  const auto kernel = std::filesystem::temp_directory_path() / "tilelab_nonhermitian.json";
  std::ofstream(kernel) << R"({"hermitian": false, "hop_default": 1, "diagonal": {"by_type": [0,0,0,0,0,0]}})";
  EXPECT_EQ(run_main({"tilelab", "--out", out, "schrod", "--kernel-file", kernel.string(), "--scales", "2,4"}),
            kExitUnsupported);
  EXPECT_EQ(run_main({"tilelab", "--out", out, "patch", "--levels", "1"}), kExitOk);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "manifest.json"));
}

TEST(Cli, FlagsOverrideConfig) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto cfg = dir / "tilelab_patch_config.json";
  const auto out = (dir / "tilelab_cli_override").string();
  std::ofstream(cfg) << R"({"command": "patch", "patch": {"levels": 1}})";
  ASSERT_EQ(run_main({"tilelab", "--config", cfg.string(), "--out", out, "patch", "--levels", "2"}), kExitOk);
  std::ifstream in(std::filesystem::path(out) / "manifest.json");
  const json m = json::parse(in);
  EXPECT_EQ(m["summary"]["tiles"], 16);
  EXPECT_EQ(m["config"]["patch"]["levels"], 2);
}

}  // namespace
}  // namespace tilelab::cli
