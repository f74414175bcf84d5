#include "tilelab/patch.hpp"

#include <algorithm>
#include <sstream>

#include "tilelab/errors.hpp"

namespace tilelab {

Polygon tile_polygon(const RuleFamily& family, const PlacedTile& tile) {
  const auto& proto = family.prototiles.at(static_cast<std::size_t>(tile.type));
  if (proto.vertices.empty()) throw UnsupportedOperation("prototile has no geometry");
  return translated(proto.vertices, tile.translation);
}

std::vector<std::pair<int, Vec2>> tile_multiset(const Patch& patch) {
  std::vector<std::pair<int, Vec2>> out;
  out.reserve(patch.tiles.size());
  for (const auto& t : patch.tiles) out.emplace_back(t.type, t.translation);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  });
  return out;
}

std::vector<long> type_counts(const Patch& patch, std::size_t prototile_count) {
  std::vector<long> counts(prototile_count, 0);
  for (const auto& t : patch.tiles) counts.at(static_cast<std::size_t>(t.type)) += 1;
  return counts;
}

std::string patch_to_csv(const RuleFamily& family, const Patch& patch) {
  std::ostringstream out;
  out.precision(17);
  out << "prototile_id,x_tile_units,y_tile_units,level,type\n";
  for (const auto& t : patch.tiles) {
    out << family.prototiles.at(static_cast<std::size_t>(t.type)).id << ',' << to_double(t.translation.x) << ','
        << to_double(t.translation.y) << ',' << t.supertile_level << ',' << t.supertile_type << '\n';
  }
  return out.str();
}

}  // namespace tilelab
