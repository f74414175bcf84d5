#include "tilelab/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tilelab {

Region Region::box(const Vec2& corner, const Vec2& widths) {
  if (widths.x < 0 || widths.y < 0) throw StructuralError("box widths must be non-negative");
  Region r;
  r.shape = Shape::box;
  r.corner = corner;
  r.widths = widths;
  return r;
}

Region Region::centered_box(const Rational& side) {
  const Rational h = side / 2;
  return box({-h, -h}, {side, side});
}

Region Region::disk(const Vec2& center, const Rational& radius) {
  if (radius < 0) throw StructuralError("disk radius must be non-negative");
  Region r;
  r.shape = Shape::disk;
  r.center = center;
  r.radius = radius;
  return r;
}

Region Region::polygon(Polygon vertices) {
  if (vertices.size() < 3) throw StructuralError("polygon region needs at least three vertices");
  Region r;
  r.shape = Shape::polygon;
  if (signed_area(vertices) < 0) std::reverse(vertices.begin(), vertices.end());
  if (!is_simple(vertices)) throw StructuralError("polygon region is not simple");
  r.vertices = std::move(vertices);
  return r;
}

Region Region::dilated(const Rational& factor) const {
  if (factor <= 0) throw StructuralError("dilation factor must be positive");
  Region r = *this;
  r.corner = factor * corner;
  r.widths = factor * widths;
  r.center = factor * center;
  r.radius = factor * radius;
  r.vertices = scaled(vertices, factor);
  return r;
}

Box Region::bounding_box() const {
  switch (shape) {
    case Shape::box:
      return {corner, corner + widths};
    case Shape::disk:
      return {{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}};
    case Shape::polygon:
      return tilelab::bounding_box(vertices);
  }
  return {};
}

bool Region::contains_point(const Vec2& p) const {
  switch (shape) {
    case Shape::box: {
      const Box b = bounding_box();
      return b.lo.x <= p.x && p.x <= b.hi.x && b.lo.y <= p.y && p.y <= b.hi.y;
    }
    case Shape::disk: {
      const Vec2 d = p - center;
      return dot(d, d) <= radius * radius;
    }
    case Shape::polygon:
      return locate(vertices, p) != Location::outside;
  }
  return false;
}

bool Region::contains(const Polygon& poly, int dimension) const {
  if (dimension == 1) {
    const Box b = bounding_box();
    const Box s = tilelab::bounding_box(poly);
    return b.lo.x <= s.lo.x && s.hi.x <= b.hi.x;
  }
  switch (shape) {
    case Shape::box:
      return box_contains(bounding_box(), tilelab::bounding_box(poly));
    case Shape::disk: {
      const Rational r2 = radius * radius;
      return std::all_of(poly.begin(), poly.end(), [&](const Vec2& v) {
        const Vec2 d = v - center;
        return dot(d, d) <= r2;
      });
    }
    case Shape::polygon:
      return contains_shape(vertices, poly, 2);
  }
  return false;
}

double Region::boundary_measure(int dimension) const {
  if (dimension == 1) return 2.0;
  switch (shape) {
    case Shape::box:
      return 2.0 * (to_double(widths.x) + to_double(widths.y));
    case Shape::disk:
      return 2.0 * std::numbers::pi * to_double(radius);
    case Shape::polygon: {
      double total = 0.0;
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec2 d = vertices[(i + 1) % vertices.size()] - vertices[i];
        total += std::sqrt(to_double(dot(d, d)));
      }
      return total;
    }
  }
  return 0.0;
}

double Region::volume(int dimension) const {
  if (dimension == 1) {
    const Box b = bounding_box();
    return to_double(b.hi.x - b.lo.x);
  }
  switch (shape) {
    case Shape::box:
      return to_double(widths.x * widths.y);
    case Shape::disk:
      return std::numbers::pi * std::pow(to_double(radius), 2);
    case Shape::polygon:
      return to_double(signed_area(vertices));
  }
  return 0.0;
}

std::vector<std::pair<double, double>> Region::boundary_samples(std::size_t count) const {
  std::vector<std::pair<double, double>> out;
  if (count == 0) return out;
  Polygon outline;
  if (shape == Shape::disk) {
    const double cx = to_double(center.x);
    const double cy = to_double(center.y);
    const double r = to_double(radius);
    for (std::size_t i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
      out.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
    }
    return out;
  }
  if (shape == Shape::box) {
    const Box b = bounding_box();
    outline = {b.lo, {b.hi.x, b.lo.y}, b.hi, {b.lo.x, b.hi.y}};
  } else {
    outline = vertices;
  }
  const double perimeter = [&] {
    double t = 0.0;
    for (std::size_t i = 0; i < outline.size(); ++i) {
      const Vec2 d = outline[(i + 1) % outline.size()] - outline[i];
      t += std::sqrt(to_double(dot(d, d)));
    }
    return t;
  }();
  for (std::size_t i = 0; i < outline.size(); ++i) {
    const Vec2& a = outline[i];
    const Vec2& b = outline[(i + 1) % outline.size()];
    const Vec2 d = b - a;
    const double len = std::sqrt(to_double(dot(d, d)));
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / perimeter * static_cast<double>(count))));
    for (std::size_t s = 0; s < n; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(n);
      out.emplace_back(to_double(a.x) + t * to_double(d.x), to_double(a.y) + t * to_double(d.y));
    }
  }
  return out;
}

namespace {

Polygon window_outline(const Region& window, int dimension) {
  const Box b = window.bounding_box();
  if (dimension == 1) return {{b.lo.x, 0}, {b.hi.x, 0}};
  if (window.shape == Region::Shape::polygon) return window.vertices;
  return {b.lo, {b.hi.x, b.lo.y}, b.hi, {b.lo.x, b.hi.y}};
}

void require_geometric_levels(SupertileTree& tree, int level) {
  const auto& f = tree.family();
  for (int k = 1; k <= level; ++k) {
    if (!f.rule_geometric(static_cast<std::size_t>(tree.sequence()[static_cast<std::size_t>(k)] - 1))) {
      throw UnsupportedOperation("level " + std::to_string(k) + " uses a matrix-only rule");
    }
  }
  if (f.dimension > 2 || f.prototiles.front().vertices.empty()) throw UnsupportedOperation("family has no geometry");
}

}  // namespace

int covering_level(SupertileTree& tree, const Region& window) {
  const auto& f = tree.family();
  if (f.dimension > 2 || f.prototiles.front().vertices.empty()) throw UnsupportedOperation("family has no geometry");
  const Polygon target = window_outline(window, f.dimension);
  const int max_level = static_cast<int>(tree.sequence().size());
  for (int k = 0; k <= max_level; ++k) {
    const SupertileNode node = tree.central(k);
    if (contains_shape(tree.footprint(node), target, f.dimension)) return k;
  }
  throw StructuralError("sequence too short: no supertile along it covers the window");
}

Patch generate_patch(SupertileTree& tree, const Region& window, std::size_t tile_budget) {
  const int top = covering_level(tree, window);
  require_geometric_levels(tree, top);
  const Box wbox = window.bounding_box();
  const int d = tree.dimension();
  Patch patch;
  patch.dimension = d;
  bool over = false;
  tree.expand(tree.central(top), [&](const SupertileNode& node) {
    if (over || !boxes_touch(tree.footprint_box(node), wbox)) return false;
    if (node.level > 0) return true;
    if (window.contains(tree.footprint(node), d)) {
      patch.tiles.push_back({node.type, node.offset, 0, -1});
      if (patch.tiles.size() > tile_budget) over = true;
    }
    return false;
  });
  if (over) throw PartialCoverError("tile budget exceeded while generating the patch", std::move(patch));
  return patch;
}

Patch generate_patch(const RuleFamily& family, const SymbolSequence& x, const Region& window, PatchOptions options) {
  SupertileTree tree(family, x, options.origin_type);
  return generate_patch(tree, window, options.tile_budget);
}

std::vector<long> DecompositionReport::total_by_level() const {
  std::vector<long> out;
  for (const auto& level : counts) {
    long s = 0;
    for (long c : level) s += c;
    out.push_back(s);
  }
  return out;
}

long DecompositionReport::total_pieces() const {
  long s = 0;
  for (long c : total_by_level()) s += c;
  return s;
}

DecompositionReport decompose_region(SupertileTree& tree, const Region& base, const Rational& T) {
  if (T <= 0) throw StructuralError("dilation T must be positive");
  const Region window = base.dilated(T);
  const int top = covering_level(tree, window);
  require_geometric_levels(tree, top);
  const auto& f = tree.family();
  const int d = f.dimension;
  const Box wbox = window.bounding_box();

  DecompositionReport report;
  report.counts.assign(static_cast<std::size_t>(top) + 1, std::vector<long>(f.size(), 0));
  tree.expand(tree.central(top), [&](const SupertileNode& node) {
    const Box box = tree.footprint_box(node);
    if (!boxes_touch(box, wbox)) return false;
    const Polygon outline = tree.footprint(node);
    if (window.contains(outline, d)) {
      report.pieces.push_back(node);
      report.counts[static_cast<std::size_t>(node.level)][static_cast<std::size_t>(node.type)] += 1;
      report.footprint_volume += tile_volume(outline, d);
      return false;
    }
    if (node.level == 0) {
      if (overlap_volume(outline, window_outline(window, d), d) > 0) report.boundary_tiles += 1;
      return false;
    }
    return true;
  });

  report.perimeter = window.boundary_measure(d);
  report.k2_by_level.assign(report.counts.size(), 0.0);
  for (std::size_t i = 0; i < report.counts.size(); ++i) {
    const Rational& inv = tree.inverse_theta(static_cast<int>(i));
    Rational scale = 1;
    for (int k = 0; k < d; ++k) scale *= inv;
    long total = 0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      report.pieces_volume += Rational(report.counts[i][j]) * scale * f.prototiles[j].volume;
      total += report.counts[i][j];
    }
    if (total > 0) report.top_level = static_cast<int>(i);
    // boundary constant: total <= K2 * |boundary| * theta_(i)^{d-1}
    const double theta_pow = std::pow(1.0 / to_double(inv), d - 1);
    report.k2_by_level[i] = static_cast<double>(total) / (report.perimeter * theta_pow);
    report.k2 = std::max(report.k2, report.k2_by_level[i]);
  }
  if (report.top_level >= 0) report.theta_n_times_T = to_double(T / tree.inverse_theta(report.top_level));
  return report;
}

DecompositionReport decompose_region(const RuleFamily& family, const SymbolSequence& x, const Region& base,
                                     const Rational& T, PatchOptions options) {
  SupertileTree tree(family, x, options.origin_type);
  return decompose_region(tree, base, T);
}

Patch expand_to_tiles(SupertileTree& tree, const std::vector<SupertileNode>& nodes, std::size_t tile_budget) {
  Patch patch;
  patch.dimension = tree.dimension();
  for (const auto& n : nodes) {
    tree.expand(n, [&](const SupertileNode& c) {
      if (c.level > 0) return true;
      patch.tiles.push_back({c.type, c.offset, n.level, n.type});
      if (patch.tiles.size() > tile_budget) throw PartialCoverError("tile budget exceeded", patch);
      return false;
    });
  }
  return patch;
}

}  // namespace tilelab
