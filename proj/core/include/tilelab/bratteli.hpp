#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tilelab/matrix.hpp"
#include "tilelab/patch.hpp"
#include "tilelab/substitution.hpp"
#include "tilelab/symbolic.hpp"

namespace tilelab {

// Edge at level k (1-based): source s(e) = child vertex at level k-1, range
// r(e) = parent vertex at level k. slot indexes the canonical branch list of
// rule x_k, branch counts repeats of the same (parent, child) pair.
struct PathEdge {
  int level = 1;
  int parent = 0;
  int child = 0;
  int branch = 0;
  int slot = 0;
};

using PathWord = std::vector<PathEdge>;

PathEdge edge_from_slot(const RuleFamily& family, const SymbolSequence& x, int level, int slot);
// Throws StructuralError unless r(e_i) = s(e_{i+1}) and every edge exists.
void check_path(const RuleFamily& family, const SymbolSequence& x, const PathWord& path);
// Canonical slots of rule x_level whose child is the given vertex.
std::vector<int> edges_from(const RuleFamily& family, const SymbolSequence& x, int level, int child);

std::vector<IntMatrix> connectivity_matrices(const RuleFamily& family, const SymbolSequence& x, std::size_t n);
BigVector path_counts(const RuleFamily& family, const SymbolSequence& x, std::size_t n);
// Smallest k <= max_depth with A_k ... A_1 strictly positive.
std::optional<std::size_t> primitivity_level(const RuleFamily& family, const SymbolSequence& x, std::size_t max_depth);

struct SpanningSystem {
  // anchors[k][v] is a path of length k ending at vertex v.
  std::vector<std::vector<PathWord>> anchors;
  std::vector<std::vector<int>> origins;  // s of each anchor (the level-0 vertex)
};

SpanningSystem spanning_system(const RuleFamily& family, const SymbolSequence& x, std::size_t depth);

struct SupertileNode {
  int level = 0;
  int type = 0;
  Vec2 offset;  // footprint = theta_(level)^{-1} * t_type + offset
};

// The nested hierarchy of a tiling from x along a central path. Level-0 nodes
// are tiles; the origin lies in the level-0 node of the path.
class SupertileTree {
 public:
  // Central path: each step picks the parent slot that keeps the origin
  // deepest inside over a short lookahead (ties go to the lowest slot).
  SupertileTree(const RuleFamily& family, const SymbolSequence& x, int origin_type = 0);
  SupertileTree(const RuleFamily& family, const SymbolSequence& x, const PathWord& path);

  const RuleFamily& family() const { return family_; }
  const SymbolSequence& sequence() const { return x_; }
  int dimension() const { return family_.dimension; }

  // Central node at the given level, extending the path when needed.
  SupertileNode central(int level);
  const PathWord& path() const { return path_; }
  int origin_type() const { return origin_type_; }

  const Rational& inverse_theta(int level);  // theta_(level)^{-1}
  Polygon footprint(const SupertileNode& node);
  Box footprint_box(const SupertileNode& node);
  std::vector<SupertileNode> children(const SupertileNode& node);
  // Child reached through a given canonical slot of the node's rule.
  SupertileNode child_through(const SupertileNode& node, int slot);

  // Depth-first expansion to tiles; visit returns false to prune a subtree.
  void expand(const SupertileNode& node, const std::function<bool(const SupertileNode&)>& visit);

 private:
  void ensure_level(int level);
  void extend_path();
  Rational lookahead_score(int level, const Vec2& w, int type, int remaining) const;
  static constexpr int kLookahead = 3;

  RuleFamily family_;
  SymbolSequence x_;
  int origin_type_ = 0;
  bool fixed_path_ = false;
  PathWord path_;
  std::vector<Rational> inverse_theta_;  // index = level
  std::vector<Vec2> central_offsets_;    // index = level
  std::vector<Box> proto_boxes_;
};

// The patch f_{e|k}^{-1} of all tiles of the level-k supertile along path,
// at unit scale, with the origin tile t_{s(e)} at the origin.
Patch approximant(const RuleFamily& family, const SymbolSequence& x, const PathWord& path,
                  std::size_t tile_budget = 10000000, int origin_type = 0);

}  // namespace tilelab
