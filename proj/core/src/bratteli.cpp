#include "tilelab/bratteli.hpp"

#include <algorithm>
#include <map>

#include "tilelab/errors.hpp"

namespace tilelab {

namespace {

const SubstitutionRule& rule_at(const RuleFamily& family, const SymbolSequence& x, int level) {
  if (level < 1 || static_cast<std::size_t>(level) > x.size()) {
    throw StructuralError("level " + std::to_string(level) + " beyond sequence length " + std::to_string(x.size()));
  }
  return family.rule_for(x[static_cast<std::size_t>(level)]);
}

}  // namespace

PathEdge edge_from_slot(const RuleFamily& family, const SymbolSequence& x, int level, int slot) {
  const auto& rule = rule_at(family, x, level);
  if (slot < 0 || static_cast<std::size_t>(slot) >= rule.branches.size()) throw StructuralError("edge slot out of range");
  const auto& b = rule.branches[static_cast<std::size_t>(slot)];
  PathEdge e;
  e.level = level;
  e.parent = b.parent;
  e.child = b.child;
  e.slot = slot;
  for (int s = slot - 1; s >= 0; --s) {
    const auto& prev = rule.branches[static_cast<std::size_t>(s)];
    if (prev.parent != b.parent || prev.child != b.child) break;
    ++e.branch;
  }
  return e;
}

void check_path(const RuleFamily& family, const SymbolSequence& x, const PathWord& path) {
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& e = path[i];
    if (e.level != static_cast<int>(i) + 1) throw StructuralError("path edges must be at consecutive levels from 1");
    const PathEdge ref = edge_from_slot(family, x, e.level, e.slot);
    if (ref.parent != e.parent || ref.child != e.child || ref.branch != e.branch) {
      throw StructuralError("path edge does not match the rule at level " + std::to_string(e.level));
    }
    if (i > 0 && path[i - 1].parent != e.child) throw StructuralError("path edges do not chain at level " + std::to_string(e.level));
  }
}

std::vector<int> edges_from(const RuleFamily& family, const SymbolSequence& x, int level, int child) {
  const auto& rule = rule_at(family, x, level);
  std::vector<int> out;
  for (std::size_t s = 0; s < rule.branches.size(); ++s)
    if (rule.branches[s].child == child) out.push_back(static_cast<int>(s));
  return out;
}

std::vector<IntMatrix> connectivity_matrices(const RuleFamily& family, const SymbolSequence& x, std::size_t n) {
  if (n > x.size()) throw StructuralError("requested more levels than the sequence provides");
  std::map<int, IntMatrix> cache;
  std::vector<IntMatrix> out;
  out.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const int symbol = x[k];
    auto it = cache.find(symbol);
    if (it == cache.end()) it = cache.emplace(symbol, substitution_matrix(family.rule_for(symbol), family.size())).first;
    out.push_back(it->second);
  }
  return out;
}

BigVector path_counts(const RuleFamily& family, const SymbolSequence& x, std::size_t n) {
  BigVector h(family.size(), BigInt(1));
  for (const auto& a : connectivity_matrices(family, x, n)) h = multiply(a, h);
  return h;
}

std::optional<std::size_t> primitivity_level(const RuleFamily& family, const SymbolSequence& x, std::size_t max_depth) {
  const auto mats = connectivity_matrices(family, x, std::min(max_depth, x.size()));
  IntMatrix p = IntMatrix::identity(family.size());
  for (std::size_t k = 0; k < mats.size(); ++k) {
    p = mats[k] * p;
    // only the zero pattern matters
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j)
        if (p(i, j) > 0) p(i, j) = 1;
    if (is_strictly_positive(p)) return k + 1;
  }
  return std::nullopt;
}

SpanningSystem spanning_system(const RuleFamily& family, const SymbolSequence& x, std::size_t depth) {
  if (depth > x.size()) throw StructuralError("spanning system deeper than the sequence");
  const std::size_t m = family.size();
  SpanningSystem sys;
  sys.anchors.assign(depth + 1, std::vector<PathWord>(m));
  sys.origins.assign(depth + 1, std::vector<int>(m, -1));
  for (std::size_t v = 0; v < m; ++v) sys.origins[0][v] = static_cast<int>(v);

  auto less = [](const PathWord& a, const PathWord& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](const PathEdge& p, const PathEdge& q) { return p.slot < q.slot; });
  };

  for (std::size_t k = 1; k <= depth; ++k) {
    const auto& rule = rule_at(family, x, static_cast<int>(k));
    for (std::size_t s = 0; s < rule.branches.size(); ++s) {
      const auto& b = rule.branches[s];
      const auto child = static_cast<std::size_t>(b.child);
      const auto parent = static_cast<std::size_t>(b.parent);
      if (sys.origins[k - 1][child] < 0) continue;
      PathWord candidate = sys.anchors[k - 1][child];
      candidate.push_back(edge_from_slot(family, x, static_cast<int>(k), static_cast<int>(s)));
      if (sys.origins[k][parent] < 0 || less(candidate, sys.anchors[k][parent])) {
        sys.anchors[k][parent] = std::move(candidate);
        sys.origins[k][parent] = sys.origins[k - 1][child];
      }
    }
    for (std::size_t v = 0; v < m; ++v) {
      if (sys.origins[k][v] < 0) {
        throw MinimalityError("vertex " + std::to_string(v) + " unreachable at level " + std::to_string(k));
      }
    }
  }
  return sys;
}

SupertileTree::SupertileTree(const RuleFamily& family, const SymbolSequence& x, int origin_type)
    : family_(family), x_(x), origin_type_(origin_type) {
  if (origin_type < 0 || static_cast<std::size_t>(origin_type) >= family.size()) throw StructuralError("origin type out of range");
  inverse_theta_.push_back(Rational(1));
  central_offsets_.push_back(Vec2{});
  for (const auto& t : family_.prototiles) {
    proto_boxes_.push_back(t.vertices.empty() ? Box{} : bounding_box(t.vertices));
  }
}

SupertileTree::SupertileTree(const RuleFamily& family, const SymbolSequence& x, const PathWord& path)
    : SupertileTree(family, x, path.empty() ? 0 : path.front().child) {
  check_path(family, x, path);
  fixed_path_ = true;
  for (const auto& e : path) {
    path_.push_back(e);
    const auto& rule = rule_at(family_, x_, e.level);
    inverse_theta_.push_back(inverse_theta_.back() / rule.theta);
    const Vec2 tau = rule.branches[static_cast<std::size_t>(e.slot)].tau;
    central_offsets_.push_back(central_offsets_.back() - inverse_theta_.back() * tau);
  }
}

// Sum over the next levels of the squared origin-to-boundary distance, measured in
// each supertile's own tile coordinates, along the best continuation.
Rational SupertileTree::lookahead_score(int level, const Vec2& w, int type, int remaining) const {
  const auto& tile = family_.prototiles[static_cast<std::size_t>(type)].vertices;
  Rational here;
  if (family_.dimension == 1) {
    here = std::min(w.x - tile[0].x, tile[1].x - w.x);
    here *= here;
  } else {
    here = boundary_distance2(tile, w);
  }
  if (remaining == 0) return here;
  const auto& rule = rule_at(family_, x_, level + 1);
  Rational best = -1;
  for (int s : edges_from(family_, x_, level + 1, type)) {
    const auto& b = rule.branches[static_cast<std::size_t>(s)];
    const Rational score = lookahead_score(level + 1, rule.theta * w + b.tau, b.parent, remaining - 1);
    if (score > best) best = score;
  }
  return here + best;
}

void SupertileTree::extend_path() {
  const int level = static_cast<int>(path_.size()) + 1;
  const auto& rule = rule_at(family_, x_, level);
  const int current = path_.empty() ? origin_type_ : path_.back().parent;
  const auto slots = edges_from(family_, x_, level, current);
  if (slots.empty()) {
    throw MinimalityError("vertex " + std::to_string(current) + " has no parent at level " + std::to_string(level));
  }
  int best = slots.front();
  if (family_.rule_geometric(static_cast<std::size_t>(x_[static_cast<std::size_t>(level)] - 1))) {
    // A single level is not enough: every half-hex child has its long edge on the
    // parent's boundary, so a one-step greedy can pin the origin to an edge forever.
    int depth = 1;
    while (depth < kLookahead && static_cast<std::size_t>(level + depth) <= x_.size() &&
           family_.rule_geometric(static_cast<std::size_t>(x_[static_cast<std::size_t>(level + depth)] - 1))) {
      ++depth;
    }
    // origin position in the current node's tile coordinates
    const Vec2 z = -(1 / inverse_theta_.back()) * central_offsets_.back();
    Rational best_score = -1;
    for (int s : slots) {
      const auto& b = rule.branches[static_cast<std::size_t>(s)];
      const Rational score = lookahead_score(level, rule.theta * z + b.tau, b.parent, depth - 1);
      if (score > best_score) {
        best_score = score;
        best = s;
      }
    }
  }
  const PathEdge e = edge_from_slot(family_, x_, level, best);
  path_.push_back(e);
  inverse_theta_.push_back(inverse_theta_.back() / rule.theta);
  const Vec2 tau = rule.branches[static_cast<std::size_t>(best)].tau;
  central_offsets_.push_back(central_offsets_.back() - inverse_theta_.back() * tau);
}

void SupertileTree::ensure_level(int level) {
  if (level < 0) throw StructuralError("negative level");
  while (static_cast<int>(path_.size()) < level) {
    if (fixed_path_) throw StructuralError("level " + std::to_string(level) + " beyond the supplied path");
    extend_path();
  }
}

SupertileNode SupertileTree::central(int level) {
  ensure_level(level);
  const int type = level == 0 ? origin_type_ : path_[static_cast<std::size_t>(level - 1)].parent;
  return {level, type, central_offsets_[static_cast<std::size_t>(level)]};
}

const Rational& SupertileTree::inverse_theta(int level) {
  if (level < 0) throw StructuralError("negative level");
  while (static_cast<int>(inverse_theta_.size()) <= level) {
    const int k = static_cast<int>(inverse_theta_.size());
    if (static_cast<int>(path_.size()) < k && !fixed_path_) {
      extend_path();
      continue;
    }
    inverse_theta_.push_back(inverse_theta_.back() / rule_at(family_, x_, k).theta);
  }
  return inverse_theta_[static_cast<std::size_t>(level)];
}

Polygon SupertileTree::footprint(const SupertileNode& node) {
  const auto& proto = family_.prototiles.at(static_cast<std::size_t>(node.type));
  if (proto.vertices.empty()) throw UnsupportedOperation("family has no prototile geometry");
  return translated(scaled(proto.vertices, inverse_theta(node.level)), node.offset);
}

Box SupertileTree::footprint_box(const SupertileNode& node) {
  const Box& b = proto_boxes_.at(static_cast<std::size_t>(node.type));
  const Rational& s = inverse_theta(node.level);
  return {s * b.lo + node.offset, s * b.hi + node.offset};
}

std::vector<SupertileNode> SupertileTree::children(const SupertileNode& node) {
  std::vector<SupertileNode> out;
  if (node.level == 0) return out;
  const auto& rule = rule_at(family_, x_, node.level);
  if (!rule.geometric) throw UnsupportedOperation("matrix-only rule at level " + std::to_string(node.level));
  const Rational& s = inverse_theta(node.level);
  for (const auto& b : rule.branches) {
    if (b.parent != node.type) continue;
    out.push_back({node.level - 1, b.child, node.offset + s * b.tau});
  }
  return out;
}

SupertileNode SupertileTree::child_through(const SupertileNode& node, int slot) {
  const auto& rule = rule_at(family_, x_, node.level);
  if (!rule.geometric) throw UnsupportedOperation("matrix-only rule at level " + std::to_string(node.level));
  const auto& b = rule.branches.at(static_cast<std::size_t>(slot));
  if (b.parent != node.type) throw StructuralError("slot does not leave this node");
  return {node.level - 1, b.child, node.offset + inverse_theta(node.level) * b.tau};
}

void SupertileTree::expand(const SupertileNode& node, const std::function<bool(const SupertileNode&)>& visit) {
  if (!visit(node) || node.level == 0) return;
  for (const auto& c : children(node)) expand(c, visit);
}

Patch approximant(const RuleFamily& family, const SymbolSequence& x, const PathWord& path, std::size_t tile_budget,
                  int origin_type) {
  for (const auto& e : path) {
    if (!family.rule_geometric(static_cast<std::size_t>(x[static_cast<std::size_t>(e.level)] - 1))) {
      throw UnsupportedOperation("approximant needs geometric rules");
    }
  }
  if (family.dimension > 2 || family.prototiles.front().vertices.empty()) {
    throw UnsupportedOperation("approximant needs prototile geometry");
  }
  SupertileTree tree = path.empty() ? SupertileTree(family, x, origin_type) : SupertileTree(family, x, path);
  const int k = static_cast<int>(path.size());
  const SupertileNode root = tree.central(k);
  const auto counts = path_counts(family, x, static_cast<std::size_t>(k));
  if (counts[static_cast<std::size_t>(root.type)] > tile_budget) {
    throw NumericError("approximant exceeds the tile budget");
  }
  Patch patch;
  patch.dimension = family.dimension;
  tree.expand(root, [&](const SupertileNode& n) {
    if (n.level == 0) patch.tiles.push_back({n.type, n.offset, 0, -1});
    return true;
  });
  return patch;
}

}  // namespace tilelab
