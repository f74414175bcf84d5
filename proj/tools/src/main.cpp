#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "tilelab_cli/cli.hpp"

namespace tilelab::cli {

using nlohmann::json;

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

// Per-subcommand flags; each lands in doc[command][key].
const std::map<std::string, std::vector<FlagSpec>>& subcommand_flags() {
  static const std::map<std::string, std::vector<FlagSpec>> table = {
      {"spectrum",
       {{"--p", "p", "p grid: list a,b,c or JSON {from,to,count}"},
        {"--steps", "steps", "matrix products per replica"},
        {"--reorth-every", "reorth_every", "QR interval"},
        {"--batches", "batches", "batches for the error bars"}}},
      {"patch",
       {{"--levels", "levels", "substitution levels"},
        {"--window", "window", "region JSON; generates the patch inside it instead"},
        {"--color", "color", "type or supertile"},
        {"--lineage-level", "lineage_level", "level recorded as the supertile lineage"},
        {"--length", "length", "sequence length"}}},
      {"render", {{"--input", "input", "patch CSV"}, {"--color", "color", "type or supertile"}}},
      {"decompose",
       {{"--base", "base", "region name or JSON"},
        {"--T", "T", "dilation factor"},
        {"--svg", "svg", "write decompose.svg (true/false)"},
        {"--length", "length", "sequence length"}}},
      {"deviate",
       {{"--p", "p", "Bernoulli parameter"},
        {"--observable", "observable", "volume, zero-trace or JSON {weights}/{weights_file}"},
        {"--mode", "mode", "regions, special or combinatorial"},
        {"--base", "base", "region name or JSON"},
        {"--T", "T", "T grid (regions mode)"},
        {"--epsilon", "epsilon", "special sequence tolerance"},
        {"--count", "count", "sequence entries"},
        {"--counts", "counts", "tile multiset (combinatorial mode)"},
        {"--window", "window", "recurrence window (combinatorial mode)"},
        {"--direction-depth", "direction_depth", "depth of the zero-trace direction"},
        {"--length", "length", "sequence length"}}},
      {"dk",
       {{"--q", "q", "radius sequence prefix|period, e.g. |2,3"},
        {"--d", "d", "dimension"},
        {"--depth", "depth", "observable depth"},
        {"--trials", "trials", "random observables"},
        {"--base-points", "base_points", "base points per observable"},
        {"--n-max", "n_max", "largest n"},
        {"--mixed-depths", "mixed_depths", "draw depth uniformly in 0..depth"}}},
      {"schrod",
       {{"--kernel-file", "kernel_file", "kernel JSON file"},
        {"--scales", "scales", "window scales"},
        {"--base", "base", "region name or JSON"},
        {"--energies", "energies", "energy grid: list or JSON {from,to,count}"},
        {"--length", "length", "sequence length"}}},
  };
  return table;
}

json flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
  }
  if (text.find(',') != std::string::npos && text.find('|') == std::string::npos) {
    json list = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) list.push_back(flag_value(item));
    return list;
  }
  return text;
}

int report(const std::string& command, const char* kind, const std::exception& e, int code) {
  std::cerr << "tilelab" << (command.empty() ? "" : " " + command) << ": " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"tilelab: substitution tilings, cocycles and deviation experiments"};
  app.require_subcommand(0, 1);
  std::string config_path, out, family, measure;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--family", family, "builtin family name or rule file");
  app.add_option("--measure", measure, "bernoulli:p or markov:file");

  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto& [name, flags] : subcommand_flags()) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
    for (const auto& f : flags) sub->add_option(f.flag, values[name][f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  try {
    json doc = json::object();
    if (!config_path.empty()) {
      doc = load_config(config_path).to_json();
      if (!command.empty() && doc.value("command", command) != command)
        throw ConfigError("config is for '" + doc["command"].get<std::string>() + "', not '" + command + "'");
    }
    if (command.empty()) command = doc.value("command", std::string());
    if (command.empty()) throw ConfigError("no subcommand given (try --help)");
    doc["command"] = command;
    if (app.count("--seed")) doc["seed"] = seed;
    if (app.count("--out")) doc["out"] = out;
    if (app.count("--threads")) doc["threads"] = threads;
    if (!family.empty()) {
      if (family.find('/') != std::string::npos || family.find(".json") != std::string::npos)
        doc["family"] = {{"file", family}};
      else
        doc["family"] = family;
    }
    if (!measure.empty()) doc["measure"] = measure;
    if (auto it = values.find(command); it != values.end()) {
      auto* sub = app.get_subcommand(command);
      for (const auto& f : subcommand_flags().at(command))
        if (sub->count(f.flag)) doc[command][f.key] = flag_value(it->second[f.key]);
    }
    const ExperimentConfig config = ExperimentConfig::from_json(doc);
    const RunResult result = run_command(config);
    write_outputs(config, result);
    for (const auto& file : result.files) std::cout << (config.out / file.first).string() << '\n';
    std::cout << (config.out / "manifest.json").string() << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    return report(command, "config error", e, kExitConfig);
  } catch (const UnsupportedOperation& e) {
    return report(command, "unsupported", e, kExitUnsupported);
  } catch (const NumericError& e) {
    return report(command, "numeric error", e, kExitNumeric);
  } catch (const StructuralError& e) {
    return report(command, "invalid input", e, kExitConfig);
  } catch (const std::exception& e) {
    return report(command, "internal error", e, kExitInternal);
  }
}

}  // namespace tilelab::cli
