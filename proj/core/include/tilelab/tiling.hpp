#pragma once

#include <cstddef>
#include <vector>

#include "tilelab/bratteli.hpp"
#include "tilelab/errors.hpp"
#include "tilelab/patch.hpp"

namespace tilelab {

// Regions live in the family's native coordinates. In dimension 1 only the
// x coordinates of box and disk are used.
struct Region {
  enum class Shape { box, disk, polygon };
  Shape shape = Shape::box;
  Vec2 corner;  // box
  Vec2 widths;  // box
  Vec2 center;  // disk
  Rational radius{0};
  Polygon vertices;  // polygon, ccw

  static Region box(const Vec2& corner, const Vec2& widths);
  static Region centered_box(const Rational& side);  // [-side/2, side/2]^2
  static Region disk(const Vec2& center, const Rational& radius);
  static Region polygon(Polygon vertices);

  Region dilated(const Rational& factor) const;  // factor * region, about the origin
  Box bounding_box() const;
  bool contains_point(const Vec2& p) const;  // closed region
  bool contains(const Polygon& shape, int dimension) const;
  double boundary_measure(int dimension) const;  // perimeter; 2 endpoints in 1D
  double volume(int dimension) const;
  // Points on the boundary (and the whole outline for polygons), for sampling.
  std::vector<std::pair<double, double>> boundary_samples(std::size_t count) const;
};

struct PatchOptions {
  std::size_t tile_budget = 10000000;
  int origin_type = 0;
};

class PartialCoverError : public NumericError {
 public:
  PartialCoverError(const std::string& what, Patch partial) : NumericError(what), partial_(std::move(partial)) {}
  const Patch& partial() const { return partial_; }

 private:
  Patch partial_;
};

// Smallest central level whose footprint contains the window.
int covering_level(SupertileTree& tree, const Region& window);

// All tiles of the tiling that lie inside the window (closed containment).
Patch generate_patch(const RuleFamily& family, const SymbolSequence& x, const Region& window, PatchOptions options = {});
Patch generate_patch(SupertileTree& tree, const Region& window, std::size_t tile_budget = 10000000);

struct DecompositionReport {
  int top_level = -1;                     // n(T, B); -1 when nothing fits
  std::vector<std::vector<long>> counts;  // counts[i][j] = kappa^(i)_j
  std::vector<SupertileNode> pieces;
  long boundary_tiles = 0;  // tiles meeting T*B (its bounding box for disks) without lying inside it
  Rational pieces_volume{0};    // sum of kappa * theta_(i)^{-d} * vol(t_j)
  Rational footprint_volume{0}; // sum of footprint volumes of the pieces
  double perimeter = 0.0;       // boundary measure of T*B
  std::vector<double> k2_by_level;
  double k2 = 0.0;              // max over levels of the fitted boundary constant
  double theta_n_times_T = 0.0; // theta_(n) * T
  std::vector<long> total_by_level() const;
  long total_pieces() const;
};

DecompositionReport decompose_region(const RuleFamily& family, const SymbolSequence& x, const Region& base,
                                     const Rational& T, PatchOptions options = {});
DecompositionReport decompose_region(SupertileTree& tree, const Region& base, const Rational& T);

// Tiles underneath a list of nodes.
Patch expand_to_tiles(SupertileTree& tree, const std::vector<SupertileNode>& nodes, std::size_t tile_budget = 10000000);

}  // namespace tilelab
