#include "tilelab/schrodinger.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "tilelab/fit.hpp"

namespace tilelab {

namespace {

using Complex = std::complex<double>;

bool in_region(const Region& region, const Vec2& p, int dimension) {
  if (dimension == 1) {
    const Box b = region.bounding_box();
    return b.lo.x <= p.x && p.x <= b.hi.x;
  }
  return region.contains_point(p);
}

// Whether the closed ball of radius r about p lies inside the region.
// Evaluated in doubles; callers only need a conservative answer.
bool ball_inside(const Region& region, const Vec2& p, double r, int dimension) {
  const double px = to_double(p.x), py = to_double(p.y);
  const Box b = region.bounding_box();
  if (dimension == 1) return to_double(b.lo.x) <= px - r && px + r <= to_double(b.hi.x);
  switch (region.shape) {
    case Region::Shape::box:
      return to_double(b.lo.x) <= px - r && px + r <= to_double(b.hi.x) && to_double(b.lo.y) <= py - r &&
             py + r <= to_double(b.hi.y);
    case Region::Shape::disk:
      return std::hypot(px - to_double(region.center.x), py - to_double(region.center.y)) + r <=
             to_double(region.radius);
    case Region::Shape::polygon:
      return region.contains_point(p) && std::sqrt(to_double(boundary_distance2(region.vertices, p))) >= r;
  }
  return false;
}

// Uniform bucket grid over puncture coordinates for radius queries.
class NeighborGrid {
 public:
  NeighborGrid(const std::vector<Puncture>& points, double cell) : points_(points), cell_(std::max(cell, 1e-9)) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(points[i].point)].push_back(i);
  }

  // Indices j != i with |p_j - p_i|^2 <= r2, ascending.
  std::vector<std::size_t> within(std::size_t i, const Rational& r2) const {
    std::vector<std::size_t> out;
    const Vec2& p = points_[i].point;
    const auto [cx, cy] = key(p);
    const long reach = static_cast<long>(std::ceil(std::sqrt(to_double(r2)) / cell_)) + 1;
    for (long dx = -reach; dx <= reach; ++dx) {
      for (long dy = -reach; dy <= reach; ++dy) {
        auto it = buckets_.find({cx + dx, cy + dy});
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second) {
          if (j == i) continue;
          const Vec2 d = points_[j].point - p;
          if (dot(d, d) <= r2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::pair<long, long> key(const Vec2& p) const {
    return {static_cast<long>(std::floor(to_double(p.x) / cell_)), static_cast<long>(std::floor(to_double(p.y) / cell_))};
  }

  const std::vector<Puncture>& points_;
  double cell_;
  std::map<std::pair<long, long>, std::vector<std::size_t>> buckets_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string pattern_id_with(const PunctureSet& punctures, const NeighborGrid& grid, std::size_t index,
                            const Rational& radius) {
  const auto& self = punctures.points[index];
  std::vector<std::pair<int, Vec2>> constellation;
  for (std::size_t j : grid.within(index, radius * radius))
    constellation.emplace_back(punctures.points[j].type, punctures.points[j].point - self.point);
  std::sort(constellation.begin(), constellation.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  });
  std::string canon = std::to_string(self.type);
  for (const auto& [t, d] : constellation) canon += ";" + std::to_string(t) + "@" + to_string(d.x) + "," + to_string(d.y);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
  return "t" + std::to_string(self.type) + ":" + buf;
}

const HopRule* match_hop(const KernelSpec& kernel, const std::string& from_pattern, int from_type, int to_type,
                         const Vec2& displacement) {
  for (const auto& rule : kernel.hops) {
    if (!rule.from_pattern.empty() && rule.from_pattern != from_pattern) continue;
    if (rule.from_type >= 0 && rule.from_type != from_type) continue;
    if (rule.to_type >= 0 && rule.to_type != to_type) continue;
    if (rule.displacement && !(*rule.displacement == displacement)) continue;
    return &rule;
  }
  return nullptr;
}

bool kernel_reads_patterns(const KernelSpec& kernel) {
  if (!kernel.diagonal_by_pattern.empty()) return true;
  return std::any_of(kernel.hops.begin(), kernel.hops.end(), [](const HopRule& h) { return !h.from_pattern.empty(); });
}

Eigen::MatrixXcd dense_matrix(const WindowedOperator& op) { return Eigen::MatrixXcd(op.matrix); }

}  // namespace

double PunctureSet::min_gap() const { return std::sqrt(to_double(min_gap2)); }

PunctureSet puncture_set(const RuleFamily& family, const Patch& patch, const Region& source) {
  if (!family.geometric()) throw UnsupportedOperation("punctures need a geometric family");
  PunctureSet out;
  out.dimension = family.dimension;
  out.source = source;
  out.points.reserve(patch.size());
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    const auto& t = patch.tiles[i];
    const auto& proto = family.prototiles.at(static_cast<std::size_t>(t.type));
    out.points.push_back({t.translation + proto.puncture, t.type, i});
  }
  for (const auto& proto : family.prototiles)
    for (const auto& v : proto.vertices) {
      const Vec2 d = v - proto.puncture;
      out.tile_reach = std::max(out.tile_reach, std::sqrt(to_double(dot(d, d))));
    }
  if (out.points.size() >= 2) {
    // a nearest neighbour shares a boundary point, so it is within two reaches
    NeighborGrid grid(out.points, out.tile_reach);
    Rational reach = rational_from_double(2.0 * out.tile_reach + 1.0);
    bool found = false;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      for (std::size_t j : grid.within(i, reach * reach)) {
        const Vec2 d = out.points[j].point - out.points[i].point;
        const Rational g = dot(d, d);
        if (g == 0) throw StructuralError("two tiles share a puncture");
        if (!found || g < out.min_gap2) out.min_gap2 = g;
        found = true;
      }
    }
  }
  return out;
}

Rational kernel_lipschitz(const KernelSpec& kernel) {
  std::vector<Rational> values;
  for (const auto& v : kernel.diagonal_by_type) values.push_back(v);
  for (const auto& [id, v] : kernel.diagonal_by_pattern) values.push_back(v);
  for (const auto& h : kernel.hops) values.push_back(abs(h.re) + abs(h.im));
  values.push_back(kernel.hop_default);
  values.push_back(0);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return kernel.range * (*hi - *lo);
}

std::string pattern_id(const PunctureSet& punctures, std::size_t index, const Rational& radius) {
  NeighborGrid grid(punctures.points, std::max(to_double(radius), 1e-3));
  return pattern_id_with(punctures, grid, index, radius);
}

WindowedOperator build_operator(const KernelSpec& kernel, const PunctureSet& punctures, const Region& window) {
  if (kernel.range <= 0) throw StructuralError("kernel range must be positive");
  const int dim = punctures.dimension;
  WindowedOperator op;
  op.window = window;
  op.dimension = dim;
  op.hermitian = kernel.hermitian;
  op.range = kernel.range;
  op.lipschitz = kernel_lipschitz(kernel);

  for (std::size_t i = 0; i < punctures.points.size(); ++i)
    if (in_region(window, punctures.points[i].point, dim)) op.sites.push_back(i);

  // every tile with a puncture within range of a site must lie in the source
  const bool patterns = kernel_reads_patterns(kernel);
  const double margin = to_double(kernel.range) + punctures.tile_reach;
  for (std::size_t s : op.sites) {
    if (!ball_inside(punctures.source, punctures.points[s].point, margin, dim))
      throw IncompletePatternError("patch does not cover the range margin around the puncture at (" +
                                   to_string(punctures.points[s].point.x) + ", " +
                                   to_string(punctures.points[s].point.y) + ")");
  }

  NeighborGrid grid(punctures.points, std::max(to_double(kernel.range), 1e-3));
  std::unordered_map<std::size_t, std::size_t> row_of;
  for (std::size_t r = 0; r < op.sites.size(); ++r) row_of[op.sites[r]] = r;

  for (std::size_t s : op.sites) {
    op.points.push_back(punctures.points[s].point);
    op.types.push_back(punctures.points[s].type);
    if (patterns) op.patterns.push_back(pattern_id_with(punctures, grid, s, kernel.range));
  }

  std::map<std::string, Rational> by_pattern(kernel.diagonal_by_pattern.begin(), kernel.diagonal_by_pattern.end());
  const std::size_t n = op.sites.size();
  op.diagonal.assign(n, Rational(0));
  for (std::size_t r = 0; r < n; ++r) {
    const int t = op.types[r];
    bool set = false;
    if (patterns) {
      auto it = by_pattern.find(op.patterns[r]);
      if (it != by_pattern.end()) {
        op.diagonal[r] = it->second;
        set = true;
      }
    }
    if (!set && static_cast<std::size_t>(t) < kernel.diagonal_by_type.size()) op.diagonal[r] = kernel.diagonal_by_type[t];
  }

  const Rational r2 = kernel.range * kernel.range;
  std::vector<MatrixEntry> off;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t s = op.sites[r];
    for (std::size_t j : grid.within(s, r2)) {
      auto it = row_of.find(j);
      if (it == row_of.end()) continue;
      const std::size_t c = it->second;
      MatrixEntry e{r, c, 0, 0};
      if (kernel.hermitian && c < r) {
        // conjugate of the (c, r) entry
        const Vec2 d = op.points[r] - op.points[c];
        const HopRule* h = match_hop(kernel, patterns ? op.patterns[c] : std::string(), op.types[c], op.types[r], d);
        e.re = h ? h->re : kernel.hop_default;
        e.im = h ? Rational(-h->im) : Rational(0);
      } else {
        const Vec2 d = op.points[c] - op.points[r];
        const HopRule* h = match_hop(kernel, patterns ? op.patterns[r] : std::string(), op.types[r], op.types[c], d);
        e.re = h ? h->re : kernel.hop_default;
        e.im = h ? h->im : Rational(0);
      }
      if (e.re == 0 && e.im == 0) continue;
      if (kernel.laplacian_diagonal) op.diagonal[r] -= e.re;
      off.push_back(std::move(e));
    }
  }
  if (kernel.hermitian && kernel.laplacian_diagonal) {
    for (const auto& e : off)
      if (e.im != 0) throw StructuralError("Laplacian diagonal needs real hops");
  }

  for (std::size_t r = 0; r < n; ++r)
    if (op.diagonal[r] != 0) op.entries.push_back({r, r, op.diagonal[r], 0});
  op.entries.insert(op.entries.end(), off.begin(), off.end());
  std::sort(op.entries.begin(), op.entries.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) { return a.row < b.row || (a.row == b.row && a.col < b.col); });

  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(op.entries.size());
  for (const auto& e : op.entries)
    triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), Complex(to_double(e.re), to_double(e.im)));
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

Rational windowed_trace(const WindowedOperator& op, const Region& subregion) {
  Rational total = 0;
  for (std::size_t r = 0; r < op.size(); ++r)
    if (in_region(subregion, op.points[r], op.dimension)) total += op.diagonal[r];
  return total;
}

Rational windowed_trace(const WindowedOperator& op, SupertileTree& tree, const std::vector<SupertileNode>& nodes) {
  const int dim = tree.dimension();
  std::vector<Polygon> shapes;
  std::vector<Box> boxes;
  for (const auto& node : nodes) {
    shapes.push_back(tree.footprint(node));
    boxes.push_back(bounding_box(shapes.back()));
    if (!op.window.contains(shapes.back(), dim)) throw StructuralError("supertile not inside the operator window");
  }
  Rational total = 0;
  for (std::size_t r = 0; r < op.size(); ++r) {
    const Vec2& p = op.points[r];
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      const Box& b = boxes[k];
      if (p.x < b.lo.x || p.x > b.hi.x) continue;
      bool inside = false;
      if (dim == 1) {
        inside = true;
      } else if (p.y >= b.lo.y && p.y <= b.hi.y) {
        inside = locate(shapes[k], p) != Location::outside;
      }
      if (inside) {
        total += op.diagonal[r];
        break;
      }
    }
  }
  return total;
}

TLCObservable induced_observable(const KernelSpec& kernel, const RuleFamily& family) {
  if (!kernel.diagonal_by_pattern.empty() || kernel.laplacian_diagonal)
    throw UnsupportedOperation("only type-keyed diagonals induce a depth-0 observable");
  RationalVector w(family.size(), Rational(0));
  for (std::size_t j = 0; j < family.size() && j < kernel.diagonal_by_type.size(); ++j)
    w[j] = kernel.diagonal_by_type[j] / family.prototiles[j].volume;
  return TLCObservable::per_type(std::move(w));
}

TraceComparison interior_trace_check(const KernelSpec& kernel, SupertileTree& tree, const Region& base,
                                     const Rational& T) {
  const RuleFamily& family = tree.family();
  const TLCObservable f = induced_observable(kernel, family);
  const Region window = base.dilated(T);
  const Box b = window.bounding_box();
  double diam = 0.0;
  for (const auto& proto : family.prototiles)
    diam = std::max(diam, std::sqrt(to_double(max_vertex_distance2(proto.vertices))));
  const Rational margin = kernel.range + rational_from_double(std::ceil(diam) + 1.0);
  Vec2 lo = b.lo - Vec2{margin, margin};
  Vec2 widths = (b.hi - b.lo) + Rational(2) * Vec2{margin, margin};
  if (family.dimension == 1) {
    lo.y = 0;
    widths.y = 0;
  }
  const Region source = Region::box(lo, widths);
  const Patch patch = generate_patch(tree, source);
  const PunctureSet punctures = puncture_set(family, patch, source);
  const WindowedOperator op = build_operator(kernel, punctures, window);
  const DecompositionReport dec = decompose_region(tree, base, T);

  TraceComparison out;
  out.sites = op.size();
  out.pieces = dec.pieces.size();
  out.trace = windowed_trace(op, tree, dec.pieces);
  const auto V = ergodic_vectors(f, family, tree.sequence(), std::max(dec.top_level, 0));
  out.integral = integrate_nodes(V, dec.pieces);
  return out;
}

std::vector<double> eigenvalues(const WindowedOperator& op) {
  if (!op.hermitian) throw UnsupportedOperation("eigenvalues need a hermitian operator");
  if (op.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense_matrix(op), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("dense eigensolver did not converge");
  std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double energy_tolerance(double energy) { return 1e-9 * std::max(1.0, std::abs(energy)); }

}  // namespace

std::size_t count_eigenvalues_below(const WindowedOperator& op, double energy) {
  if (!op.hermitian) throw UnsupportedOperation("eigenvalue counts need a hermitian operator");
  const auto n = static_cast<Eigen::Index>(op.size());
  if (n == 0) return 0;
  Eigen::SparseMatrix<Complex> identity(n, n);
  identity.setIdentity();
  // Sylvester: the number of negative pivots of LDL^T equals the number of
  // negative eigenvalues. Shift slightly past the energy so that eigenvalues
  // equal to it are counted; nudge further if a pivot vanishes.
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double shift = energy + energy_tolerance(energy) * (1.0 + 7.0 * attempt);
    Eigen::SparseMatrix<Complex> shifted = op.matrix - Complex(shift, 0.0) * identity;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Complex>, Eigen::Lower> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) continue;
    const auto D = ldlt.vectorD();
    bool zero_pivot = false;
    std::size_t negatives = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      const double d = D[i].real();
      if (d == 0.0 || !std::isfinite(d)) zero_pivot = true;
      if (d < 0.0) ++negatives;
    }
    if (!zero_pivot) return negatives;
  }
  throw NumericError("LDL^T factorisation failed at every shift near E = " + std::to_string(energy));
}

IDSReport ids_estimate(const std::vector<WindowedOperator>& ops, const std::vector<double>& energies,
                       std::size_t threads) {
  IDSReport report;
  report.energies = energies;
  report.curves.resize(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (!ops[i].hermitian) throw UnsupportedOperation("window " + std::to_string(i) + ": the IDS needs a hermitian operator");
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string error;
  auto work = [&]() {
    for (std::size_t i = next++; i < ops.size(); i = next++) {
      try {
        IDSCurve curve;
        curve.window = i;
        curve.points = ops[i].size();
        curve.values.resize(energies.size(), 0.0);
        if (curve.points > 0) {
          const double n = static_cast<double>(curve.points);
          if (curve.points <= kDenseEigenLimit) {
            const auto ev = eigenvalues(ops[i]);
            for (std::size_t e = 0; e < energies.size(); ++e) {
              const double cut = energies[e] + energy_tolerance(energies[e]);
              curve.values[e] = static_cast<double>(std::upper_bound(ev.begin(), ev.end(), cut) - ev.begin()) / n;
            }
          } else {
            curve.dense = false;
            for (std::size_t e = 0; e < energies.size(); ++e)
              curve.values[e] = static_cast<double>(count_eigenvalues_below(ops[i], energies[e])) / n;
          }
        }
        report.curves[i] = std::move(curve);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error.empty()) error = "window " + std::to_string(i) + ": " + ex.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, ops.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (!error.empty()) throw NumericError(error);

  for (std::size_t i = 1; i < report.curves.size(); ++i) {
    double sup = 0.0;
    for (std::size_t e = 0; e < energies.size(); ++e)
      sup = std::max(sup, std::abs(report.curves[i].values[e] - report.curves[i - 1].values[e]));
    report.sup_differences.push_back(sup);
  }
  return report;
}

bool pulled_back_trace_flag(const LyapunovReport& report, std::size_t r, int dimension) {
  const auto distinct = report.distinct();
  if (r < 1 || r > distinct.size()) throw StructuralError("exponent index out of range");
  if (!(distinct[0] > 0.0)) throw NumericError("top exponent must be positive");
  return distinct[r - 1] / distinct[0] > static_cast<double>(dimension - 1) / dimension;
}

TraceDeviation trace_deviation(const KernelSpec& kernel, const RuleFamily& family, const SymbolSequence& x,
                               const SpecialAveragingSequence& seq, const LyapunovReport& spectrum, std::size_t r,
                               std::size_t direction_depth) {
  const TLCObservable f = induced_observable(kernel, family);
  TraceDeviation out;
  const auto u = top_left_direction(family, x, std::min(direction_depth, x.size()));
  double pair = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t j = 0; j < family.size(); ++j) {
    const double v = to_double(f.weights[j] * family.prototiles[j].volume);
    pair += u.unit[j] * v;
    nu += u.unit[j] * u.unit[j];
    nv += v * v;
  }
  out.pairing = (nu > 0 && nv > 0) ? std::abs(pair) / std::sqrt(nu * nv) : 0.0;
  out.zero_trace = out.pairing < 1e-10;

  const auto dev = deviation_along_sequence(f, seq, family, x);
  out.slope = dev.slope;
  out.running_max_slope = dev.running_max_slope;

  const auto distinct = spectrum.distinct();
  if (r < 1 || r > distinct.size()) throw StructuralError("exponent index out of range");
  out.ratio = distinct[r - 1] / distinct[0];
  out.predicted = family.dimension * out.ratio;
  out.trace_flag = pulled_back_trace_flag(spectrum, r, family.dimension);
  return out;
}

}  // namespace tilelab
