#include "tilelab/geometry.hpp"

#include <algorithm>

#include "tilelab/errors.hpp"

namespace tilelab {

Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
Vec2 operator*(const Rational& s, const Vec2& a) { return {s * a.x, s * a.y}; }
bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
bool operator<(const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

Rational cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
Rational dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

namespace {

int sign(const Rational& r) { return sgn(r); }

Rational orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  if (orient(a, b, p) != 0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = sign(orient(a, b, c));
  const int o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a));
  const int o4 = sign(orient(c, d, b));
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
         (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
}

}  // namespace

Rational signed_area(const Polygon& poly) {
  Rational twice = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross(poly[i], poly[(i + 1) % n]);
  return twice / 2;
}

Polygon translated(const Polygon& poly, const Vec2& by) {
  Polygon out;
  out.reserve(poly.size());
  for (const auto& v : poly) out.push_back(v + by);
  return out;
}

Polygon scaled(const Polygon& poly, const Rational& factor) {
  Polygon out;
  out.reserve(poly.size());
  for (const auto& v : poly) out.push_back(factor * v);
  return out;
}

Polygon normalize_polygon(Polygon poly) {
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  bool changed = true;
  while (changed && poly.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& prev = poly[(i + poly.size() - 1) % poly.size()];
      const auto& next = poly[(i + 1) % poly.size()];
      if (poly[i] == next || (orient(prev, poly[i], next) == 0 && dot(poly[i] - prev, next - poly[i]) >= 0)) {
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return poly;
}

Vec2 centroid(const Polygon& poly) {
  if (poly.size() == 2) return ratio(1, 2) * (poly[0] + poly[1]);
  Rational twice = 0;
  Vec2 acc;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const Rational c = cross(a, b);
    twice += c;
    acc.x += (a.x + b.x) * c;
    acc.y += (a.y + b.y) * c;
  }
  if (twice == 0) throw StructuralError("centroid of degenerate polygon");
  const Rational k = 1 / (3 * twice);
  return k * acc;
}

Box bounding_box(const Polygon& poly) {
  if (poly.empty()) throw StructuralError("bounding box of empty polygon");
  Box box{poly.front(), poly.front()};
  for (const auto& v : poly) {
    if (v.x < box.lo.x) box.lo.x = v.x;
    if (v.y < box.lo.y) box.lo.y = v.y;
    if (v.x > box.hi.x) box.hi.x = v.x;
    if (v.y > box.hi.y) box.hi.y = v.y;
  }
  return box;
}

bool box_contains(const Box& outer, const Box& inner) {
  return outer.lo.x <= inner.lo.x && outer.lo.y <= inner.lo.y && inner.hi.x <= outer.hi.x &&
         inner.hi.y <= outer.hi.y;
}

bool boxes_overlap(const Box& a, const Box& b) {
  return a.lo.x < b.hi.x && b.lo.x < a.hi.x && a.lo.y < b.hi.y && b.lo.y < a.hi.y;
}

bool boxes_touch(const Box& a, const Box& b) {
  return a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y && b.lo.y <= a.hi.y;
}

bool is_convex(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return true;
  int seen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = sign(orient(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]));
    if (s == 0) continue;
    if (seen == 0) seen = s;
    if (s != seen) return false;
  }
  return true;
}

bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (poly[i] == poly[(i + 1) % n]) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % n];
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      if (!adjacent) {
        if (segments_intersect(a, b, c, d)) return false;
      } else {
        // adjacent edges may only share their common vertex
        const Vec2& shared = (j == i + 1) ? b : a;
        const Vec2& far_first = (j == i + 1) ? a : b;
        const Vec2& far_second = (j == i + 1) ? d : c;
        if (orient(far_first, shared, far_second) == 0 && dot(far_first - shared, far_second - shared) > 0) {
          return false;
        }
      }
    }
  }
  return signed_area(poly) != 0;
}

Location locate(const Polygon& poly, const Vec2& p) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (on_segment(p, a, b)) return Location::boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const Rational side = orient(a, b, p);
      if ((b.y > a.y) == (side > 0)) inside = !inside;
    }
  }
  return inside ? Location::inside : Location::outside;
}

std::vector<Polygon> triangulate(const Polygon& input) {
  Polygon poly = normalize_polygon(input);
  std::vector<Polygon> out;
  if (poly.size() < 3) return out;
  std::vector<std::size_t> idx(poly.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::size_t guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Vec2& a = poly[idx[(k + idx.size() - 1) % idx.size()]];
      const Vec2& b = poly[idx[k]];
      const Vec2& c = poly[idx[(k + 1) % idx.size()]];
      const Rational turn = orient(a, b, c);
      if (turn < 0) continue;
      if (turn == 0) {
        idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
        clipped = true;
        break;
      }
      bool ear = true;
      for (std::size_t m = 0; m < idx.size() && ear; ++m) {
        const Vec2& q = poly[idx[m]];
        if (q == a || q == b || q == c) continue;
        if (point_in_triangle(q, a, b, c)) ear = false;
      }
      if (!ear) continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 4 * poly.size() * poly.size()) {
      throw StructuralError("triangulation failed: polygon is not simple");
    }
  }
  if (orient(poly[idx[0]], poly[idx[1]], poly[idx[2]]) > 0) out.push_back({poly[idx[0]], poly[idx[1]], poly[idx[2]]});
  return out;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon output = subject;
  const std::size_t n = clip.size();
  for (std::size_t i = 0; i < n && !output.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % n];
    const Vec2 edge = b - a;
    Polygon input;
    input.swap(output);
    const std::size_t m = input.size();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec2& p = input[j];
      const Vec2& q = input[(j + 1) % m];
      const Rational sp = cross(edge, p - a);
      const Rational sq = cross(edge, q - a);
      if (sp >= 0) output.push_back(p);
      if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
        const Rational t = sp / (sp - sq);
        output.push_back(p + t * (q - p));
      }
    }
  }
  if (output.size() < 3) output.clear();
  return output;
}

Rational intersection_area(const Polygon& a, const Polygon& b) {
  const Box ba = bounding_box(a);
  const Box bb = bounding_box(b);
  if (!boxes_overlap(ba, bb)) return 0;
  const auto ta = triangulate(a);
  const auto tb = triangulate(b);
  Rational total = 0;
  for (const auto& s : ta) {
    const Box bs = bounding_box(s);
    for (const auto& c : tb) {
      if (!boxes_overlap(bs, bounding_box(c))) continue;
      const Polygon piece = clip_convex(s, c);
      if (!piece.empty()) total += signed_area(piece);
    }
  }
  return total;
}

Rational segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const Rational len2 = dot(ab, ab);
  if (len2 == 0) return dot(ap, ap);
  Rational t = dot(ap, ab) / len2;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  const Vec2 d = ap - t * ab;
  return dot(d, d);
}

Rational boundary_distance2(const Polygon& poly, const Vec2& p) {
  Rational best = -1;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Rational d = segment_distance2(p, poly[i], poly[(i + 1) % n]);
    if (best < 0 || d < best) best = d;
  }
  return best;
}

Rational max_vertex_distance2(const Polygon& poly) {
  Rational best = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) {
      const Vec2 d = poly[i] - poly[j];
      const Rational v = dot(d, d);
      if (v > best) best = v;
    }
  }
  return best;
}

Rational tile_volume(const Polygon& tile, int dimension) {
  if (dimension == 1) return abs(tile.at(1).x - tile.at(0).x);
  return abs(signed_area(tile));
}

Rational overlap_volume(const Polygon& a, const Polygon& b, int dimension) {
  if (dimension == 1) {
    const Rational lo = std::max(std::min(a[0].x, a[1].x), std::min(b[0].x, b[1].x));
    const Rational hi = std::min(std::max(a[0].x, a[1].x), std::max(b[0].x, b[1].x));
    return hi > lo ? Rational(hi - lo) : Rational(0);
  }
  return intersection_area(a, b);
}

bool contains_shape(const Polygon& outer, const Polygon& inner, int dimension) {
  if (dimension == 1) {
    return box_contains(bounding_box(outer), bounding_box(inner));
  }
  if (!box_contains(bounding_box(outer), bounding_box(inner))) return false;
  if (is_convex(outer)) {
    return std::all_of(inner.begin(), inner.end(),
                       [&](const Vec2& v) { return locate(outer, v) != Location::outside; });
  }
  return intersection_area(outer, inner) == abs(signed_area(inner));
}

}  // namespace tilelab
