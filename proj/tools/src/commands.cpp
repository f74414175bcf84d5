#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tilelab/ergodic.hpp"
#include "tilelab/fit.hpp"
#include "tilelab_cli/cli.hpp"

namespace tilelab::cli {

using nlohmann::json;

namespace {

template <class T>
T param(const json& block, const char* key, T fallback) {
  if (!block.contains(key)) return fallback;
  try {
    return block[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// A list of numbers, or {"from", "to", "count"} (inclusive ends).
std::vector<double> number_grid(const json& block, const char* key, std::vector<double> fallback) {
  if (!block.contains(key)) return fallback;
  const json& g = block[key];
  try {
    if (g.is_array()) return g.get<std::vector<double>>();
    if (g.is_object()) {
      const double from = g.at("from").get<double>(), to = g.at("to").get<double>();
      const int count = g.at("count").get<int>();
      if (count < 1) throw ConfigError(std::string("'") + key + "' needs count >= 1");
      std::vector<double> out;
      for (int i = 0; i < count; ++i) out.push_back(count == 1 ? from : from + (to - from) * i / (count - 1));
      return out;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad grid '") + key + "': " + e.what());
  }
  throw ConfigError(std::string("'") + key + "' must be a list or {from, to, count}");
}

std::vector<Rational> rational_list(const json& block, const char* key, std::vector<Rational> fallback) {
  if (!block.contains(key)) return fallback;
  if (!block[key].is_array()) throw ConfigError(std::string("'") + key + "' must be a list");
  std::vector<Rational> out;
  for (const auto& v : block[key]) out.push_back(json_rational(v));
  return out;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return SplitMix64::mix(SplitMix64::mix(seed ^ (0x9E3779B97F4A7C15ull * (a + 1))) + b);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Merged view: family, measure and sequence may sit at top level or in the block.
json scoped(const ExperimentConfig& config) {
  json merged = config.doc;
  const json block = config.block();
  for (const auto& [k, v] : block.items()) merged[k] = v;
  return merged;
}

double slope_so_far(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  try {
    return running_max_slope(x, y);
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

Rational tile_margin(const RuleFamily& family) {
  double reach = 0.0;
  for (const auto& proto : family.prototiles)
    for (const auto& v : proto.vertices) {
      const Vec2 d = v - proto.puncture;
      reach = std::max(reach, std::sqrt(to_double(dot(d, d))));
    }
  return Rational(static_cast<long>(std::ceil(reach)) + 1);
}

TLCObservable parse_observable(const json& block, const RuleFamily& family, const SymbolSequence& x) {
  const json obs = block.contains("observable") ? block["observable"] : json("zero-trace");
  if (obs.is_string()) {
    const auto name = obs.get<std::string>();
    if (name == "volume") return TLCObservable::constant(family.size());
    if (name == "zero-trace")
      return make_zero_trace_observable(family, x, static_cast<std::size_t>(param(block, "direction_depth", 10)));
    throw ConfigError("unknown observable '" + name + "'");
  }
  RationalVector w;
  if (obs.contains("weights")) {
    for (const auto& v : obs["weights"]) w.push_back(json_rational(v));
  } else if (obs.contains("weights_file")) {
    std::string text = read_text(obs["weights_file"].get<std::string>());
    for (char& c : text)
      if (c == ',' || c == '\n' || c == '\r' || c == '\t') c = ' ';
    std::istringstream in(text);
    std::string item;
    while (in >> item) w.push_back(parse_rational(item));
  } else {
    throw ConfigError("observable must be volume, zero-trace, {weights} or {weights_file}");
  }
  if (w.size() != family.size())
    throw ConfigError("observable has " + std::to_string(w.size()) + " weights for " + std::to_string(family.size()) +
                      " prototiles");
  return TLCObservable::per_type(std::move(w));
}

RunResult run_spectrum(const ExperimentConfig& config) {
  const json b = scoped(config);
  const RuleFamily family = config_family(b, "halfhex_pair");
  if (family.rules.size() != 2) throw ConfigError("the p sweep needs a two-rule family");
  const auto ps = number_grid(b, "p", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  const auto steps = param<std::size_t>(b, "steps", 20000);
  LyapunovOptions options;
  options.reorth_every = param<std::size_t>(b, "reorth_every", 5);
  options.batches = param<std::size_t>(b, "batches", 20);
  options.threads = config.threads;

  CsvWriter csv({"p", "index", "exponent[nats]", "stderr[nats]", "multiplicity", "normalized[1]"});
  json top = json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i] < 0.0 || ps[i] > 1.0) throw ConfigError("p must lie in [0, 1]");
    const auto report = lyapunov_spectrum(family, MeasureSpec::bernoulli(ps[i]), steps, derived_seed(config.seed, i),
                                          options.reorth_every, options);
    for (std::size_t k = 0; k < report.exponents.size(); ++k)
      csv.row({format_double(ps[i]), std::to_string(k + 1), format_double(report.exponents[k]),
               format_double(report.standard_errors[k]), std::to_string(report.multiplicities[k]),
               format_double(report.normalized[k])});
    top.push_back({{"p", ps[i]}, {"lambda_1", report.exponents[0]}, {"stderr", report.standard_errors[0]}});
  }
  RunResult r;
  r.files.emplace_back("spectrum.csv", csv.str());
  r.summary = {{"family", family.name}, {"steps", steps}, {"rows", csv.rows()}, {"top_exponent", top}};
  return r;
}

SvgStyle style_from(const json& b, std::string title) {
  SvgStyle style;
  const auto color = param<std::string>(b, "color", "type");
  if (color == "supertile") {
    style.color = SvgStyle::Color::supertile;
  } else if (color != "type") {
    throw ConfigError("color must be type or supertile");
  }
  style.title = std::move(title);
  return style;
}

RunResult run_patch(const ExperimentConfig& config) {
  const json b = scoped(config);
  const RuleFamily family = config_family(b, "halfhex");
  const int levels = param(b, "levels", 3);
  if (levels < 0) throw ConfigError("levels must be non-negative");
  const auto x = config_sequence(b, family, static_cast<std::size_t>(param(b, "length", levels + 16)), config.seed);
  SupertileTree tree(family, x);
  Patch patch;
  patch.dimension = family.dimension;
  if (b.contains("window")) {
    patch = generate_patch(tree, parse_region(b["window"]));
  } else {
    const int lineage = std::min(param(b, "lineage_level", 1), levels);
    int super_type = -1;
    tree.expand(tree.central(levels), [&](const SupertileNode& n) {
      if (n.level == lineage) super_type = n.type;
      if (n.level == 0) patch.tiles.push_back({n.type, n.offset, lineage, super_type});
      return true;
    });
  }
  RunResult r;
  r.files.emplace_back("patch.csv", patch_to_csv(family, patch));
  r.files.emplace_back("patch.svg", render_svg(family, patch, style_from(b, family.name + " patch")));
  r.summary = {{"family", family.name}, {"tiles", patch.size()}, {"levels", levels},
               {"type_counts", type_counts(patch, family.size())}};
  return r;
}

RunResult run_render(const ExperimentConfig& config) {
  const json b = scoped(config);
  const RuleFamily family = config_family(b, "halfhex");
  if (!b.contains("input")) throw ConfigError("render needs an input patch CSV");
  const Patch patch = read_patch_csv(family, read_text(b["input"].get<std::string>()));
  RunResult r;
  r.files.emplace_back("render.svg", render_svg(family, patch, style_from(b, family.name + " patch")));
  r.summary = {{"family", family.name}, {"tiles", patch.size()}};
  return r;
}

RunResult run_decompose(const ExperimentConfig& config) {
  const json b = scoped(config);
  const RuleFamily family = config_family(b, "halfhex");
  const auto x = config_sequence(b, family, static_cast<std::size_t>(param(b, "length", 48)), config.seed);
  SupertileTree tree(family, x);
  const Region base = parse_region(b.contains("base") ? b["base"] : json("square"));
  const Rational T = b.contains("T") ? json_rational(b["T"]) : Rational(16);
  const auto report = decompose_region(tree, base, T);

  CsvWriter csv({"level", "type", "count", "volume[tile_area]"});
  for (std::size_t i = 0; i < report.counts.size(); ++i) {
    Rational scale = 1;
    for (int d = 0; d < family.dimension; ++d) scale *= tree.inverse_theta(static_cast<int>(i));
    for (std::size_t j = 0; j < report.counts[i].size(); ++j)
      csv.row({std::to_string(i), std::to_string(j), std::to_string(report.counts[i][j]),
               format_double(to_double(scale * family.prototiles[j].volume))});
  }
  RunResult r;
  r.files.emplace_back("decompose.csv", csv.str());
  if (param(b, "svg", true)) {
    std::vector<Polygon> outlines;
    for (const auto& node : report.pieces) outlines.push_back(tree.footprint(node));
    const Patch tiles = expand_to_tiles(tree, report.pieces);
    r.files.emplace_back("decompose.svg", render_svg(family, tiles, style_from(b, "decomposition"), outlines));
  }
  r.summary = {{"family", family.name},
               {"T", to_string(T)},
               {"top_level", report.top_level},
               {"pieces", report.total_pieces()},
               {"pieces_by_level", report.total_by_level()},
               {"boundary_tiles", report.boundary_tiles},
               {"pieces_volume", to_string(report.pieces_volume)},
               {"theta_n_times_T", report.theta_n_times_T}};
  return r;
}

RunResult run_deviate(const ExperimentConfig& config) {
  json b = scoped(config);
  const RuleFamily family = config_family(b, b.contains("p") || b.contains("measure") ? "halfhex_pair" : "halfhex");
  if (b.contains("p") && !b.contains("measure") && !b.contains("sequence"))
    b["measure"] = "bernoulli:" + format_double(param(b, "p", 0.5));
  const int min_length = param(b, "count", 10) + param(b, "window", 1) + param(b, "direction_depth", 10) + 2;
  const auto x =
      config_sequence(b, family, static_cast<std::size_t>(param(b, "length", std::max(48, min_length))), config.seed);
  const TLCObservable f = parse_observable(b, family, x);
  const auto mode = param<std::string>(b, "mode", "regions");
  const Region base = parse_region(b.contains("base") ? b["base"] : json("square"));

  RunResult r;
  std::vector<double> lx, ly;
  if (mode == "regions") {
    SupertileTree tree(family, x);
    const auto grid = rational_list(b, "T", {8, 16, 32, 64, 128});
    const auto report = deviation_over_regions(f, tree, base, grid);
    CsvWriter csv({"T[tile_lengths]", "integral[tile_area]", "log_T", "log_abs_integral", "running_slope"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Rational& I = report.integrals[i];
      const double lt = log_abs(grid[i]), li = I == 0 ? -std::numeric_limits<double>::infinity() : log_abs(I);
      if (I != 0) {
        lx.push_back(lt);
        ly.push_back(li);
      }
      csv.row({format_double(to_double(grid[i])), format_double(to_double(I)), format_double(lt), format_double(li),
               format_double(slope_so_far(lx, ly))});
    }
    r.files.emplace_back("deviate.csv", csv.str());
    r.summary = {{"slope", report.slope}, {"slope_error", report.slope_error},
                 {"running_max_slope", report.running_max_slope}};
  } else if (mode == "special" || mode == "combinatorial") {
    SpecialAveragingSequence seq;
    const auto count = param<std::size_t>(b, "count", 10);
    if (mode == "special") {
      SupertileTree tree(family, x);
      seq = special_averaging_sequence(tree, base, param(b, "epsilon", 0.05), count);
    } else {
      const auto counts = param<std::vector<long>>(b, "counts", [&] {
        std::vector<long> one(family.size(), 0);
        one[0] = 1;
        return one;
      }());
      seq = combinatorial_sequence(family, x, counts, count, param(b, "window", 1));
    }
    const auto dev = deviation_along_sequence(f, seq, family, x);
    CsvWriter csv({"k", "T[tile_lengths]", "integral[tile_area]", "log_T", "log_abs_integral", "running_slope"});
    for (std::size_t i = 0; i < seq.entries.size(); ++i) {
      const Rational& I = dev.integrals[i];
      const double lt = log_abs(seq.entries[i].T);
      const double li = I == 0 ? -std::numeric_limits<double>::infinity() : log_abs(I);
      if (I != 0) {
        lx.push_back(lt);
        ly.push_back(li);
      }
      csv.row({std::to_string(seq.entries[i].k), format_double(to_double(seq.entries[i].T)),
               format_double(to_double(I)), format_double(lt), format_double(li), format_double(slope_so_far(lx, ly))});
    }
    r.files.emplace_back("deviate.csv", csv.str());
    r.summary = {{"slope", dev.slope}, {"running_max_slope", dev.running_max_slope}, {"entries", seq.entries.size()},
                 {"T_star", to_string(seq.T_star)}, {"hausdorff", seq.hausdorff}};
  } else {
    throw ConfigError("mode must be regions, special or combinatorial");
  }
  r.summary["family"] = family.name;
  r.summary["mode"] = mode;
  return r;
}

RunResult run_dk(const ExperimentConfig& config) {
  const json b = config.block();
  const int d = param(b, "d", 1);
  const auto spec = parse_solenoid(d, param<std::string>(b, "q", "|2"));
  const int depth = param(b, "depth", 2);
  const int trials = param(b, "trials", 10);
  const int base_points = param(b, "base_points", 5);
  const int n_min = param(b, "n_min", 0);
  const int n_max = param(b, "n_max", 10);
  const bool mixed = param(b, "mixed_depths", false);  // depth uniform in 0..depth per trial
  if (depth < 0 || trials < 1 || base_points < 1 || n_min < 0 || n_max < n_min) throw ConfigError("bad dk parameters");

  CsvWriter csv({"trial", "base_point", "n", "S_n[tile_volume]", "expected[tile_volume]", "gap[tile_volume]",
                 "var[tile_volume]", "holds"});
  long cases = 0, violations = 0;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int m = mixed ? static_cast<int>(derived_seed(config.seed, 1000 + t) % static_cast<std::uint64_t>(depth + 1))
                        : depth;
    const auto f = random_observable(spec, m, derived_seed(config.seed, t));
    for (int p = 0; p < base_points; ++p) {
      const auto point = random_base_point(spec, std::max(m, n_max), derived_seed(config.seed, t, p + 1));
      const auto report = dk_check(spec, f, point, n_min, n_max);
      for (const auto& row : report.rows) {
        const bool holds = row.gap <= report.var;
        csv.row({std::to_string(t), std::to_string(p), std::to_string(row.n), to_string(row.S), to_string(row.expected),
                 to_string(row.gap), to_string(report.var), holds ? "1" : "0"});
        ++cases;
        if (!holds) ++violations;
        if (report.var > 0) worst = std::max(worst, to_double(row.gap / report.var));
      }
    }
  }
  RunResult r;
  r.files.emplace_back("dk.csv", csv.str());
  r.summary = {{"cases", cases}, {"violations", violations}, {"max_gap_over_var", worst}, {"d", d}, {"depth", depth}};
  if (violations > 0) r.exit_code = kExitNumeric;
  return r;
}

RunResult run_schrod(const ExperimentConfig& config) {
  const json b = scoped(config);
  const RuleFamily family = config_family(b, "halfhex");
  KernelSpec kernel;
  if (b.contains("kernel")) {
    kernel = parse_kernel(b["kernel"]);
  } else if (b.contains("kernel_file")) {
    try {
      kernel = parse_kernel(json::parse(read_text(b["kernel_file"].get<std::string>())));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("kernel file is not valid JSON: ") + e.what());
    }
  } else {
    throw ConfigError("schrod needs a kernel or kernel_file");
  }
  const auto x = config_sequence(b, family, static_cast<std::size_t>(param(b, "length", 48)), config.seed);
  SupertileTree tree(family, x);
  const Region base = parse_region(b.contains("base") ? b["base"] : json("square"));
  const auto scales = rational_list(b, "scales", {4, 8, 16});
  const auto energies = number_grid(b, "energies", [] {
    std::vector<double> e;
    for (int i = 0; i <= 40; ++i) e.push_back(-1.0 + 0.25 * i);
    return e;
  }());
  const bool interior = kernel.diagonal_by_pattern.empty() && !kernel.laplacian_diagonal;
  const Rational margin = kernel.range + tile_margin(family);

  CsvWriter traces({"window", "scale[tile_lengths]", "sites", "trace[energy]", "interior_trace[energy]",
                    "ergodic_integral[energy]"});
  std::vector<WindowedOperator> ops;
  bool all_match = true;
  for (std::size_t w = 0; w < scales.size(); ++w) {
    const Region window = base.dilated(scales[w]);
    const Box box = window.bounding_box();
    Vec2 lo = box.lo - Vec2{margin, margin};
    Vec2 widths = (box.hi - box.lo) + Rational(2) * Vec2{margin, margin};
    if (family.dimension == 1) lo.y = widths.y = 0;
    const Region source = Region::box(lo, widths);
    const PunctureSet punctures = puncture_set(family, generate_patch(tree, source), source);
    ops.push_back(build_operator(kernel, punctures, window));
    std::string it, ei;
    if (interior) {
      const auto cmp = interior_trace_check(kernel, tree, base, scales[w]);
      it = to_string(cmp.trace);
      ei = to_string(cmp.integral);
      all_match = all_match && cmp.trace == cmp.integral;
    }
    traces.row({std::to_string(w), to_string(scales[w]), std::to_string(ops.back().size()),
                to_string(windowed_trace(ops.back(), window)), it, ei});
  }
  const auto ids = ids_estimate(ops, energies, config.threads);
  CsvWriter ids_csv({"window", "E[energy]", "IDS[1]"});
  for (const auto& curve : ids.curves)
    for (std::size_t e = 0; e < energies.size(); ++e)
      ids_csv.row({std::to_string(curve.window), format_double(energies[e]), format_double(curve.values[e])});

  RunResult r;
  r.files.emplace_back("traces.csv", traces.str());
  r.files.emplace_back("ids.csv", ids_csv.str());
  r.summary = {{"family", family.name}, {"windows", ops.size()}, {"sup_differences", ids.sup_differences}};
  if (interior) r.summary["interior_traces_match"] = all_match;
  if (!all_match) r.exit_code = kExitNumeric;
  return r;
}

}  // namespace

RunResult run_command(const ExperimentConfig& config) {
  if (config.command == "spectrum") return run_spectrum(config);
  if (config.command == "patch") return run_patch(config);
  if (config.command == "render") return run_render(config);
  if (config.command == "decompose") return run_decompose(config);
  if (config.command == "deviate") return run_deviate(config);
  if (config.command == "dk") return run_dk(config);
  if (config.command == "schrod") return run_schrod(config);
  if (config.command.empty()) throw ConfigError("no subcommand given");
  throw ConfigError("unknown subcommand '" + config.command + "'");
}

}  // namespace tilelab::cli
