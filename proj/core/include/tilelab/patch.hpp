#pragma once

#include <string>
#include <vector>

#include "tilelab/geometry.hpp"
#include "tilelab/substitution.hpp"

namespace tilelab {

struct PlacedTile {
  int type = 0;  // prototile index
  Vec2 translation;
  int supertile_level = 0;  // lineage: level and type of the enclosing supertile, if tracked
  int supertile_type = -1;
};

struct Patch {
  int dimension = 2;
  std::vector<PlacedTile> tiles;

  std::size_t size() const { return tiles.size(); }
  bool empty() const { return tiles.empty(); }
};

Polygon tile_polygon(const RuleFamily& family, const PlacedTile& tile);
// Tiles ordered by (type, translation); equal vectors mean equal multisets.
std::vector<std::pair<int, Vec2>> tile_multiset(const Patch& patch);
std::vector<long> type_counts(const Patch& patch, std::size_t prototile_count);
// CSV: prototile_id, x, y, level, type.
std::string patch_to_csv(const RuleFamily& family, const Patch& patch);

}  // namespace tilelab
