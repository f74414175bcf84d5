#include "tilelab/ergodic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "tilelab/errors.hpp"
#include "tilelab/fit.hpp"

namespace tilelab {

std::vector<PathClass> path_classes(const RuleFamily& family, const SymbolSequence& x, int depth) {
  if (depth < 0) throw StructuralError("negative observable depth");
  if (static_cast<std::size_t>(depth) > x.size()) throw StructuralError("observable depth exceeds the sequence");
  std::vector<PathClass> out;
  PathClass current;
  std::function<void(int, int)> walk = [&](int level, int vertex) {
    if (level == depth) {
      current.top = vertex;
      out.push_back(current);
      return;
    }
    const auto& rule = family.rule_for(x[static_cast<std::size_t>(level + 1)]);
    for (int s : edges_from(family, x, level + 1, vertex)) {
      current.slots.push_back(s);
      walk(level + 1, rule.branches[static_cast<std::size_t>(s)].parent);
      current.slots.pop_back();
    }
  };
  for (std::size_t v = 0; v < family.size(); ++v) {
    current = PathClass{static_cast<int>(v), {}, static_cast<int>(v)};
    walk(0, static_cast<int>(v));
  }
  return out;
}

TLCObservable TLCObservable::constant(std::size_t types, const Rational& value) {
  return {0, RationalVector(types, value)};
}

TLCObservable TLCObservable::per_type(RationalVector weights) { return {0, std::move(weights)}; }

namespace {

// Lexicographically least slot continuation from (level, vertex) up to depth.
std::vector<int> least_continuation(const RuleFamily& family, const SymbolSequence& x, int level, int vertex,
                                    int depth) {
  std::vector<int> slots;
  std::function<bool(int, int)> walk = [&](int l, int v) {
    if (l == depth) return true;
    const auto& rule = family.rule_for(x[static_cast<std::size_t>(l + 1)]);
    for (int s : edges_from(family, x, l + 1, v)) {
      slots.push_back(s);
      if (walk(l + 1, rule.branches[static_cast<std::size_t>(s)].parent)) return true;
      slots.pop_back();
    }
    return false;
  };
  if (!walk(level, vertex)) {
    throw MinimalityError("vertex " + std::to_string(vertex) + " at level " + std::to_string(level) +
                          " has no continuation to level " + std::to_string(depth));
  }
  return slots;
}

double max_abs(const RationalVector& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, std::abs(to_double(e)));
  return m;
}

RationalVector subtract(const RationalVector& a, const RationalVector& b) {
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

std::vector<RationalVector> ergodic_vectors(const TLCObservable& f, const RuleFamily& family, const SymbolSequence& x,
                                            int K) {
  if (K < 0) throw StructuralError("negative level");
  const int m = f.depth;
  const std::size_t M = family.size();
  const auto mats = connectivity_matrices(family, x, static_cast<std::size_t>(std::max(K, m)));
  const auto vols = family.volumes();
  std::vector<RationalVector> V;

  if (m == 0) {
    if (f.weights.size() != M) throw StructuralError("depth-0 observable needs one weight per prototile");
    RationalVector v0(M);
    for (std::size_t j = 0; j < M; ++j) v0[j] = f.weights[j] * vols[j];
    V.push_back(std::move(v0));
    for (int k = 1; k <= K; ++k) V.push_back(multiply(mats[static_cast<std::size_t>(k - 1)], V.back()));
    return V;
  }

  const auto classes = path_classes(family, x, m);
  if (f.weights.size() != classes.size()) {
    throw StructuralError("depth-" + std::to_string(m) + " observable needs " + std::to_string(classes.size()) +
                          " weights, got " + std::to_string(f.weights.size()));
  }
  // vertex sequence of every class
  std::vector<std::vector<int>> vertices(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    int v = classes[c].origin;
    vertices[c].push_back(v);
    for (std::size_t l = 0; l < classes[c].slots.size(); ++l) {
      v = family.rule_for(x[l + 1]).branches[static_cast<std::size_t>(classes[c].slots[l])].parent;
      vertices[c].push_back(v);
    }
  }
  for (int k = 0; k <= std::min(K, m); ++k) {
    RationalVector vk(M, Rational(0));
    for (std::size_t v = 0; v < M; ++v) {
      const auto cont = least_continuation(family, x, k, static_cast<int>(v), m);
      for (std::size_t c = 0; c < classes.size(); ++c) {
        if (vertices[c][static_cast<std::size_t>(k)] != static_cast<int>(v)) continue;
        if (!std::equal(cont.begin(), cont.end(), classes[c].slots.begin() + k)) continue;
        vk[v] += f.weights[c] * vols[static_cast<std::size_t>(classes[c].origin)];
      }
    }
    V.push_back(std::move(vk));
  }
  for (int k = m + 1; k <= K; ++k) V.push_back(multiply(mats[static_cast<std::size_t>(k - 1)], V.back()));
  return V;
}

CotraceEstimate cotrace_shadow(const TLCObservable& f, const RuleFamily& family, const SymbolSequence& x, int K) {
  if (K < 0) throw StructuralError("negative level");
  const auto V = ergodic_vectors(f, family, x, K);
  const auto mats = connectivity_matrices(family, x, static_cast<std::size_t>(K));
  const std::size_t M = family.size();
  CotraceEstimate est;
  for (int k = 0; k < K; ++k) {
    est.residuals.push_back(max_abs(subtract(V[static_cast<std::size_t>(k + 1)],
                                             multiply(mats[static_cast<std::size_t>(k)], V[static_cast<std::size_t>(k)]))));
  }
  if (f.depth == 0 || f.depth > K) {
    est.a = V[0];
  } else {
    // least-squares solution of A_m..A_1 a = V^m
    IntMatrix P = IntMatrix::identity(M);
    for (int k = 0; k < f.depth; ++k) P = mats[static_cast<std::size_t>(k)] * P;
    Eigen::MatrixXd Pd = to_eigen(P);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(M));
    for (std::size_t j = 0; j < M; ++j) rhs(static_cast<Eigen::Index>(j)) = to_double(V[static_cast<std::size_t>(f.depth)][j]);
    const Eigen::VectorXd sol = Pd.completeOrthogonalDecomposition().solve(rhs);
    est.a.resize(M);
    for (std::size_t j = 0; j < M; ++j) est.a[j] = rational_from_double(sol(static_cast<Eigen::Index>(j)));
  }
  RationalVector image = est.a;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) image = multiply(mats[static_cast<std::size_t>(k - 1)], image);
    const double scale = max_abs(V[static_cast<std::size_t>(k)]);
    const double gap = max_abs(subtract(image, V[static_cast<std::size_t>(k)]));
    est.shadow_gaps.push_back(scale > 0 ? gap / scale : gap);
  }
  return est;
}

TLCObservable make_zero_trace_observable(const RuleFamily& family, const SymbolSequence& x, std::size_t depth) {
  const std::size_t M = family.size();
  if (M == 1) throw StructuralError("trace space is trivial: a single vertex admits no zero-trace observable");
  const auto top = top_left_direction(family, x, depth);
  RationalVector u(M);
  Rational uu = 0;
  for (std::size_t j = 0; j < M; ++j) {
    u[j] = Rational(top.exact[j]);
    uu += u[j] * u[j];
  }
  std::vector<RationalVector> candidates;
  {
    RationalVector g(M);
    for (std::size_t j = 0; j < M; ++j) g[j] = Rational(static_cast<long>(j + 1));
    candidates.push_back(g);
  }
  for (std::size_t i = 0; i < M; ++i) {
    RationalVector e(M, Rational(0));
    e[i] = 1;
    candidates.push_back(e);
  }
  const auto vols = family.volumes();
  for (const auto& g : candidates) {
    Rational ug = 0;
    for (std::size_t j = 0; j < M; ++j) ug += u[j] * g[j];
    RationalVector w(M);
    Rational peak = 0;
    for (std::size_t j = 0; j < M; ++j) {
      w[j] = (g[j] - ug / uu * u[j]) / vols[j];
      peak = std::max(peak, abs(w[j]));
    }
    if (peak == 0) continue;
    for (auto& e : w) e /= peak;
    return TLCObservable::per_type(std::move(w));
  }
  throw StructuralError("trace space is trivial: no zero-trace observable exists");
}

Rational integrate_nodes(const std::vector<RationalVector>& V, const std::vector<SupertileNode>& nodes) {
  Rational total = 0;
  for (const auto& n : nodes) {
    if (static_cast<std::size_t>(n.level) >= V.size()) throw StructuralError("ergodic vectors do not reach node level");
    total += V[static_cast<std::size_t>(n.level)][static_cast<std::size_t>(n.type)];
  }
  return total;
}

Rational integrate_patch(const TLCObservable& f, const RuleFamily& family, const Patch& patch) {
  if (f.depth != 0) throw UnsupportedOperation("tile-wise integration needs a depth-0 observable");
  Rational total = 0;
  for (const auto& t : patch.tiles) {
    const auto j = static_cast<std::size_t>(t.type);
    total += f.weights[j] * family.prototiles[j].volume;
  }
  return total;
}

DeviationReport deviation_over_regions(const TLCObservable& f, SupertileTree& tree, const Region& base,
                                       const std::vector<Rational>& T_grid) {
  if (f.depth != 0) throw UnsupportedOperation("region deviation needs a depth-0 observable");
  std::vector<DecompositionReport> parts;
  int K = 0;
  for (const auto& T : T_grid) {
    parts.push_back(decompose_region(tree, base, T));
    K = std::max(K, static_cast<int>(parts.back().counts.size()) - 1);
  }
  const auto V = ergodic_vectors(f, tree.family(), tree.sequence(), K);
  DeviationReport report;
  for (std::size_t t = 0; t < T_grid.size(); ++t) {
    report.T.push_back(to_double(T_grid[t]));
    Rational integral = 0;
    const auto& counts = parts[t].counts;
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (std::size_t j = 0; j < counts[i].size(); ++j) integral += Rational(counts[i][j]) * V[i][j];
    report.integrals.push_back(integral);
    if (integral != 0) {
      report.log_T.push_back(log_abs(T_grid[t]));
      report.log_abs_integral.push_back(log_abs(integral));
    }
  }
  if (report.log_T.size() < 4) throw InsufficientData("fewer than 4 dilations with a nonzero integral");
  const auto fit = fit_line_top_half(report.log_T, report.log_abs_integral);
  report.slope = fit.slope;
  report.slope_error = fit.slope_error;
  report.running_max_slope = running_max_slope(report.log_T, report.log_abs_integral);
  return report;
}

double deviation_cap(const LyapunovReport& report, std::size_t j, int dimension) {
  if (j == 0 || j > report.exponents.size()) throw StructuralError("exponent index out of range");
  const double ratio = report.exponents[j - 1] / report.exponents[0];
  const double d = dimension;
  return std::isfinite(ratio) ? std::max(d * ratio, d - 1) : d - 1;
}

namespace {

struct DPoint {
  double x, y;
};

using DPolygon = std::vector<DPoint>;

DPolygon to_doubles(const Polygon& p) {
  DPolygon out;
  for (const auto& v : p) out.push_back({to_double(v.x), to_double(v.y)});
  return out;
}

bool inside(const DPolygon& poly, DPoint p) {
  if (poly.size() == 2) return std::min(poly[0].x, poly[1].x) <= p.x && p.x <= std::max(poly[0].x, poly[1].x);
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const DPoint a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

double segment_distance(DPoint p, DPoint a, DPoint b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

double distance_to(const DPolygon& poly, DPoint p) {
  if (inside(poly, p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) best = std::min(best, segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  return best;
}

struct DBox {
  double lo_x, lo_y, hi_x, hi_y;
};

DBox box_of(const DPolygon& p) {
  DBox b{p[0].x, p[0].y, p[0].x, p[0].y};
  for (const auto& v : p) {
    b.lo_x = std::min(b.lo_x, v.x);
    b.lo_y = std::min(b.lo_y, v.y);
    b.hi_x = std::max(b.hi_x, v.x);
    b.hi_y = std::max(b.hi_y, v.y);
  }
  return b;
}

double box_distance(const DBox& b, DPoint p) {
  const double dx = std::max({b.lo_x - p.x, 0.0, p.x - b.hi_x});
  const double dy = std::max({b.lo_y - p.y, 0.0, p.y - b.hi_y});
  return std::hypot(dx, dy);
}

class TileUnion {
 public:
  TileUnion(const RuleFamily& family, const Patch& patch) {
    for (const auto& t : patch.tiles) {
      polys_.push_back(to_doubles(tile_polygon(family, t)));
      boxes_.push_back(box_of(polys_.back()));
    }
  }
  double distance(DPoint p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polys_.size() && best > 0; ++i) {
      if (box_distance(boxes_[i], p) >= best) continue;
      best = std::min(best, distance_to(polys_[i], p));
    }
    return best;
  }

 private:
  std::vector<DPolygon> polys_;
  std::vector<DBox> boxes_;
};

std::vector<DPoint> region_samples(const Region& region, int dimension, std::size_t count) {
  std::vector<DPoint> pts;
  const Box b = region.bounding_box();
  const double lx = to_double(b.lo.x), hx = to_double(b.hi.x);
  if (dimension == 1) {
    for (std::size_t i = 0; i <= count; ++i) pts.push_back({lx + (hx - lx) * static_cast<double>(i) / static_cast<double>(count), 0.0});
    return pts;
  }
  for (const auto& [x, y] : region.boundary_samples(count)) pts.push_back({x, y});
  const double ly = to_double(b.lo.y), hy = to_double(b.hi.y);
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  for (std::size_t i = 0; i <= side; ++i) {
    for (std::size_t j = 0; j <= side; ++j) {
      const double px = lx + (hx - lx) * static_cast<double>(i) / static_cast<double>(side);
      const double py = ly + (hy - ly) * static_cast<double>(j) / static_cast<double>(side);
      if (region.contains_point({rational_from_double(px), rational_from_double(py)})) pts.push_back({px, py});
    }
  }
  return pts;
}

}  // namespace

double sampled_hausdorff(const RuleFamily& family, const Patch& patch, const Rational& T, const Region& region,
                         std::size_t samples) {
  if (patch.empty()) return std::numeric_limits<double>::infinity();
  const TileUnion tiles(family, patch);
  const double t = to_double(T);
  double worst = 0.0;
  // tiles lie inside T*region, so only points of the region far from the tiles count
  for (const auto& p : region_samples(region, family.dimension, samples)) {
    worst = std::max(worst, tiles.distance({t * p.x, t * p.y}) / t);
  }
  return worst;
}

namespace {

// Sets S_l of level-l vertices from which (target_level, target) is reachable, l = target_level..top.
std::vector<std::vector<bool>> reachability(const RuleFamily& family, const SymbolSequence& x, int target_level,
                                            int target, int top) {
  std::vector<std::vector<bool>> sets;
  std::vector<bool> s(family.size(), false);
  s[static_cast<std::size_t>(target)] = true;
  sets.push_back(s);
  for (int l = target_level + 1; l <= top; ++l) {
    std::vector<bool> next(family.size(), false);
    for (const auto& b : family.rule_for(x[static_cast<std::size_t>(l)]).branches) {
      if (sets.back()[static_cast<std::size_t>(b.child)]) next[static_cast<std::size_t>(b.parent)] = true;
    }
    sets.push_back(std::move(next));
  }
  return sets;
}

}  // namespace

SpecialAveragingSequence special_averaging_sequence(SupertileTree& tree, const Region& base, double epsilon,
                                                    std::size_t count, SpecialOptions options) {
  if (epsilon <= 0) throw StructuralError("epsilon must be positive");
  const auto& family = tree.family();
  const auto& x = tree.sequence();
  SpecialAveragingSequence seq;
  seq.geometric = true;

  Rational T = 1;
  bool found = false;
  for (int step = 0; step <= options.max_doublings; ++step, T *= 2) {
    Patch p = generate_patch(tree, base.dilated(T), options.tile_budget);
    if (p.empty()) continue;
    const double h = sampled_hausdorff(family, p, T, base, options.hausdorff_samples);
    const auto present = type_counts(p, family.size());
    const bool every_type = std::all_of(present.begin(), present.end(), [](long c) { return c > 0; });
    if (h <= epsilon && every_type) {
      seq.base = std::move(p);
      seq.T_star = T;
      seq.hausdorff = h;
      found = true;
      break;
    }
  }
  if (!found) throw NumericError("no dyadic dilation up to 2^" + std::to_string(options.max_doublings) + " meets epsilon");

  // lowest central supertile containing the whole base patch
  int lca = 0;
  for (;; ++lca) {
    if (static_cast<std::size_t>(lca) > x.size()) throw StructuralError("sequence too short for the base patch");
    const Polygon outline = tree.footprint(tree.central(lca));
    const bool all = std::all_of(seq.base.tiles.begin(), seq.base.tiles.end(), [&](const PlacedTile& t) {
      return contains_shape(outline, tile_polygon(family, t), family.dimension);
    });
    if (all) break;
  }
  const auto prim = primitivity_level(family, x, x.size());
  seq.window = std::max({lca, 1, prim ? static_cast<int>(*prim) : 0});
  const SupertileNode host = tree.central(seq.window);
  seq.base_type = host.type;
  seq.base_offset = host.offset;
  seq.counts = type_counts(seq.base, family.size());

  const auto times = recurrence_times(x, static_cast<std::size_t>(seq.window));
  for (std::size_t k : times) {
    if (seq.entries.size() == count) break;
    const int target = static_cast<int>(k) + seq.window;
    if (static_cast<std::size_t>(target) > x.size()) break;
    const auto sets = reachability(family, x, target, seq.base_type, static_cast<int>(x.size()));
    int top = target;
    while (static_cast<std::size_t>(top) <= x.size() &&
           !sets[static_cast<std::size_t>(top - target)][static_cast<std::size_t>(tree.central(top).type)]) {
      ++top;
    }
    if (static_cast<std::size_t>(top) > x.size()) break;
    SupertileNode node = tree.central(top);
    while (node.level > target) {
      bool moved = false;
      for (const auto& c : tree.children(node)) {
        if (sets[static_cast<std::size_t>(c.level - target)][static_cast<std::size_t>(c.type)]) {
          node = c;
          moved = true;
          break;
        }
      }
      if (!moved) throw StructuralError("reachability descent failed");
    }
    const int ki = static_cast<int>(k);
    const Rational inv = tree.inverse_theta(ki);
    if (tree.inverse_theta(target) != inv * tree.inverse_theta(seq.window)) {
      throw StructuralError("recurrence does not preserve the contraction");
    }
    SpecialEntry e;
    e.k = ki;
    e.T = inv * seq.T_star;
    e.tau = (1 / seq.T_star) * ((1 / inv) * node.offset - seq.base_offset);
    e.anchor = node;
    for (const auto& t : seq.base.tiles) e.pieces.push_back({ki, t.type, inv * (t.translation - seq.base_offset) + node.offset});
    seq.entries.push_back(std::move(e));
  }
  if (seq.entries.empty()) {
    throw StructuralError("no recurrence of the first " + std::to_string(seq.window) + " symbols within the sequence");
  }
  return seq;
}

SpecialAveragingSequence combinatorial_sequence(const RuleFamily& family, const SymbolSequence& x,
                                                std::vector<long> counts, std::size_t count, int window) {
  if (counts.size() != family.size()) throw StructuralError("counts need one entry per vertex");
  if (window < 1) throw StructuralError("window must be positive");
  SpecialAveragingSequence seq;
  seq.counts = std::move(counts);
  seq.window = window;
  std::vector<Rational> inv{Rational(1)};
  for (std::size_t k = 1; k <= x.size(); ++k) inv.push_back(inv.back() / family.rule_for(x[k]).theta);
  for (std::size_t k : recurrence_times(x, static_cast<std::size_t>(window))) {
    if (seq.entries.size() == count) break;
    SpecialEntry e;
    e.k = static_cast<int>(k);
    e.T = inv[k];
    seq.entries.push_back(std::move(e));
  }
  if (seq.entries.empty()) {
    throw StructuralError("no recurrence of the first " + std::to_string(window) + " symbols within the sequence");
  }
  return seq;
}

SequenceDeviation deviation_along_sequence(const TLCObservable& f, const SpecialAveragingSequence& seq,
                                           const RuleFamily& family, const SymbolSequence& x) {
  if (seq.entries.size() < 5) throw InsufficientData("need at least 5 sequence entries");
  int K = 0;
  for (const auto& e : seq.entries) K = std::max(K, e.k);
  const auto V = ergodic_vectors(f, family, x, K);
  SequenceDeviation out;
  for (const auto& e : seq.entries) {
    Rational integral = 0;
    for (std::size_t j = 0; j < seq.counts.size(); ++j) integral += Rational(seq.counts[j]) * V[static_cast<std::size_t>(e.k)][j];
    out.integrals.push_back(integral);
    if (integral == 0) continue;
    out.log_T.push_back(log_abs(e.T));
    out.log_abs_integral.push_back(log_abs(integral));
  }
  if (out.log_T.empty()) throw NumericError("degenerate observable: every sequence integral vanishes");
  if (out.log_T.size() < 2) throw InsufficientData("fewer than two nonzero sequence integrals");
  out.slope = fit_line_top_half(out.log_T, out.log_abs_integral).slope;
  out.running_max_slope = running_max_slope(out.log_T, out.log_abs_integral);
  return out;
}

}  // namespace tilelab
