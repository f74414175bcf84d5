#pragma once

#include <vector>

#include "tilelab/rational.hpp"

namespace tilelab {

struct Vec2 {
  Rational x{0};
  Rational y{0};
};

Vec2 operator+(const Vec2& a, const Vec2& b);
Vec2 operator-(const Vec2& a, const Vec2& b);
Vec2 operator-(const Vec2& a);
Vec2 operator*(const Rational& s, const Vec2& a);
bool operator==(const Vec2& a, const Vec2& b);
bool operator<(const Vec2& a, const Vec2& b);  // lexicographic

Rational cross(const Vec2& a, const Vec2& b);
Rational dot(const Vec2& a, const Vec2& b);

// Vertex list; counter-clockwise after normalize_polygon. A 1D tile is stored
// as the two endpoints (lo,0), (hi,0).
using Polygon = std::vector<Vec2>;

struct Box {
  Vec2 lo;
  Vec2 hi;
};

Rational signed_area(const Polygon& poly);
Polygon translated(const Polygon& poly, const Vec2& by);
Polygon scaled(const Polygon& poly, const Rational& factor);
Polygon normalize_polygon(Polygon poly);  // ccw, collinear vertices dropped
Vec2 centroid(const Polygon& poly);
Box bounding_box(const Polygon& poly);
bool box_contains(const Box& outer, const Box& inner);
bool boxes_overlap(const Box& a, const Box& b);  // positive-area overlap
bool boxes_touch(const Box& a, const Box& b);    // closed boxes intersect

bool is_convex(const Polygon& poly);
bool is_simple(const Polygon& poly);

enum class Location { inside, boundary, outside };
Location locate(const Polygon& poly, const Vec2& p);

std::vector<Polygon> triangulate(const Polygon& poly);
// Sutherland-Hodgman; clip must be convex and ccw.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);
Rational intersection_area(const Polygon& a, const Polygon& b);

Rational segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b);
Rational boundary_distance2(const Polygon& poly, const Vec2& p);
Rational max_vertex_distance2(const Polygon& poly);  // diameter squared

// Dimension-aware measures: d = 1 treats the polygon as an interval on x.
Rational tile_volume(const Polygon& tile, int dimension);
Rational overlap_volume(const Polygon& a, const Polygon& b, int dimension);
bool contains_shape(const Polygon& outer, const Polygon& inner, int dimension);

}  // namespace tilelab
